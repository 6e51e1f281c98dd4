use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{CostMap, NavError};
use crate::mapping::Cell;

/// Arrival times in seconds at unit speed; `f64::INFINITY` marks cells the
/// front never reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalField {
    size: usize,
    cell_size: f64,
    t: Vec<f64>,
}

impl ArrivalField {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn in_bounds(&self, (r, c): Cell) -> bool {
        r >= 0 && c >= 0 && (r as usize) < self.size && (c as usize) < self.size
    }

    /// Arrival time at `cell`; out-of-bounds cells are unreachable.
    pub fn get(&self, cell: Cell) -> f64 {
        if !self.in_bounds(cell) {
            return f64::INFINITY;
        }
        self.t[cell.0 as usize * self.size + cell.1 as usize]
    }

    pub fn is_reachable(&self, cell: Cell) -> bool {
        self.get(cell).is_finite()
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    /// One CSV row per map row, `inf` for unreachable cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.t.len() * 8);
        for row in self.t.chunks(self.size) {
            let cells: Vec<String> = row
                .iter()
                .map(|v| if v.is_finite() { format!("{v:.6}") } else { "inf".into() })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(PartialEq)]
struct Entry {
    t: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First-order upwind update from the smaller known neighbour along each
/// axis.
fn upwind(a: f64, b: f64, w: f64) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    if !b.is_finite() || b - a >= w {
        a + w
    } else {
        0.5 * (a + b + (2.0 * w * w - (a - b) * (a - b)).sqrt())
    }
}

/// Update stencil of the marching front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// Axis neighbours only.
    Four,
    /// Axis neighbours plus the eight triangles formed with the diagonal
    /// neighbours.
    #[default]
    Eight,
}

/// Arrival at a cell from a triangle formed by an axis neighbour (time `tj`,
/// slowness `sj`) and the diagonal neighbour beside it (`tk`, `sk`). The
/// crossing point on the edge between them is the constant-slowness
/// optimum; the step is then weighted by the mean of the cell's slowness
/// `si` and the slowness interpolated at the crossing point.
fn triangle(tj: f64, tk: f64, si: f64, sj: f64, sk: f64, h: f64) -> f64 {
    let w = 0.5 * h * (si + sj);
    let d = tk - tj;
    if d >= 0.0 {
        return tj + w;
    }
    let r = (-d / w).min(std::f64::consts::FRAC_1_SQRT_2);
    let mu = r / (1.0 - r * r).sqrt();
    let s = 0.5 * (si + (1.0 - mu) * sj + mu * sk);
    tj + mu * d + h * s * (1.0 + mu * mu).sqrt()
}

/// Solves the eikonal equation with speed `clamp(1 - cost, floor, 1)` from a
/// single goal cell.
pub fn fmm_solve(cost: &CostMap, goal: Cell, floor: f64) -> Result<ArrivalField, NavError> {
    fmm_solve_with(cost, &[goal], floor, Stencil::default())
}

/// As [`fmm_solve`] with several zero-time source cells.
pub fn fmm_solve_multi(cost: &CostMap, goals: &[Cell], floor: f64) -> Result<ArrivalField, NavError> {
    fmm_solve_with(cost, goals, floor, Stencil::default())
}

pub fn fmm_solve_with(
    cost: &CostMap,
    goals: &[Cell],
    floor: f64,
    stencil: Stencil,
) -> Result<ArrivalField, NavError> {
    let n = cost.size();
    let h = cost.cell_size();
    let mut t = vec![f64::INFINITY; n * n];
    let mut known = vec![false; n * n];
    let mut heap = BinaryHeap::new();
    for &g in goals {
        if cost.is_obstacle(g) {
            return Err(NavError::GoalBlocked(g));
        }
        let i = cost.index(g);
        t[i] = 0.0;
        heap.push(Entry { t: 0.0, idx: i });
    }

    while let Some(Entry { t: ti, idx }) = heap.pop() {
        if known[idx] || ti > t[idx] {
            continue;
        }
        known[idx] = true;
        let (r, c) = ((idx / n) as i32, (idx % n) as i32);
        let neighbours: &[(i32, i32)] = match stencil {
            Stencil::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Stencil::Eight => &[(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)],
        };
        for &(dr, dc) in neighbours {
            let nb = (r + dr, c + dc);
            if cost.is_obstacle(nb) {
                continue;
            }
            let j = cost.index(nb);
            if known[j] {
                continue;
            }
            let val = |cell: Cell| -> f64 {
                if cost.in_bounds(cell) {
                    let k = cost.index(cell);
                    if known[k] {
                        return t[k];
                    }
                }
                f64::INFINITY
            };
            let cand = match stencil {
                Stencil::Four => {
                    let w = h / cost.speed(nb, floor);
                    let a = val((nb.0, nb.1 - 1)).min(val((nb.0, nb.1 + 1)));
                    let b = val((nb.0 - 1, nb.1)).min(val((nb.0 + 1, nb.1)));
                    upwind(a, b, w)
                }
                Stencil::Eight => {
                    // Moving between cell centres spends half the step in
                    // each cell, so step weights average the two slownesses.
                    // Each axis neighbour pairs with the two diagonals beside
                    // it; a diagonal alone never updates, so reachability
                    // stays 4-connected.
                    let slow = |cell: Cell| 1.0 / cost.speed(cell, floor);
                    let si = slow(nb);
                    let mut best = f64::INFINITY;
                    for (ar, ac) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                        let jc = (nb.0 + ar, nb.1 + ac);
                        let tj = val(jc);
                        if !tj.is_finite() {
                            continue;
                        }
                        let wj = 0.5 * h * (si + slow(jc));
                        best = best.min(tj + wj);
                        let sides = if ar == 0 { [(-1, ac), (1, ac)] } else { [(ar, -1), (ar, 1)] };
                        for (kr, kc) in sides {
                            // the diagonal step must not cut an obstacle corner
                            let other = if ar == 0 { (kr, 0) } else { (0, kc) };
                            if cost.is_obstacle((nb.0 + other.0, nb.1 + other.1)) {
                                continue;
                            }
                            let kcell = (nb.0 + kr, nb.1 + kc);
                            let tk = val(kcell);
                            if tk.is_finite() {
                                let sk = slow(kcell);
                                best = best
                                    .min(triangle(tj, tk, si, slow(jc), sk, h))
                                    .min(tk + std::f64::consts::SQRT_2 * 0.5 * h * (si + sk));
                            }
                        }
                    }
                    best
                }
            };
            if cand < t[j] {
                t[j] = cand;
                heap.push(Entry { t: cand, idx: j });
            }
        }
    }
    Ok(ArrivalField {
        size: n,
        cell_size: h,
        t,
    })
}
