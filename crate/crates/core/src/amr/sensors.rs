use crate::grid::StaggeredGrid;

/// Refinement indicators on one level, one value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Sensors {
    pub emb: Vec<f64>,
    pub pml: Vec<f64>,
    pub sol: Vec<f64>,
}

const SMOOTHING_SWEEPS: usize = 2;

/// Centered difference magnitude; one-sided at the boundary. `scale` is 1/h or 1.
fn gradient_magnitude(g: &StaggeredGrid, f: &[f64], divided: bool) -> Vec<f64> {
    let (nx, ny) = (g.nx, g.ny);
    let (sx, sy) = if divided { (1.0 / g.hx, 1.0 / g.hy) } else { (1.0, 1.0) };
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (il, ir) = (i.saturating_sub(1), (i + 1).min(nx - 1));
            let (jl, jr) = (j.saturating_sub(1), (j + 1).min(ny - 1));
            let dx = (f[j * nx + ir] - f[j * nx + il]) / (ir - il) as f64 * sx;
            let dy = (f[jr * nx + i] - f[jl * nx + i]) / (jr - jl) as f64 * sy;
            out[j * nx + i] = dx.hypot(dy);
        }
    }
    out
}

/// Average each cell with its in-range 4-neighbours.
fn smooth(g: &StaggeredGrid, f: &mut Vec<f64>) {
    let (nx, ny) = (g.nx, g.ny);
    for _ in 0..SMOOTHING_SWEEPS {
        let mut next = vec![0.0; f.len()];
        for j in 0..ny {
            for i in 0..nx {
                let mut s = f[j * nx + i];
                let mut k = 1.0;
                if i > 0 {
                    s += f[j * nx + i - 1];
                    k += 1.0;
                }
                if i + 1 < nx {
                    s += f[j * nx + i + 1];
                    k += 1.0;
                }
                if j > 0 {
                    s += f[(j - 1) * nx + i];
                    k += 1.0;
                }
                if j + 1 < ny {
                    s += f[(j + 1) * nx + i];
                    k += 1.0;
                }
                next[j * nx + i] = s / k;
            }
        }
        *f = next;
    }
}

/// `|grad psi|`, the layer indicator and the undivided pressure gradient, each smoothed.
pub fn compute_sensors(g: &StaggeredGrid, psi: &[f64], in_layer: &[bool], p: &[f64]) -> Sensors {
    let mut emb = gradient_magnitude(g, psi, true);
    let mut pml: Vec<f64> = in_layer.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut sol = gradient_magnitude(g, p, false);
    smooth(g, &mut emb);
    smooth(g, &mut pml);
    smooth(g, &mut sol);
    Sensors { emb, pml, sol }
}
