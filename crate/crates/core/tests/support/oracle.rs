//! Naive loop implementation of the LSCM equations.

use lscm_core::lscm::{lscm_forward, Depth, LevelParams};
use lscm_core::rng::Rng;
use lscm_core::text::DependencyTree;
use lscm_core::{Tape, Tensor};

const T: usize = 4;
const H: usize = 3;
const W: usize = 3;
const C_V: usize = 6;
const C_L: usize = 4;
const C_H: usize = 5;
const C_O: usize = 3;
const RANK: usize = 2;
pub const TOL: f64 = 1e-10;

type Mat = Vec<Vec<f64>>;

fn mat(t: &Tensor, rows: usize, cols: usize) -> Mat {
    assert_eq!(t.numel(), rows * cols);
    (0..rows)
        .map(|r| t.data()[r * cols..(r + 1) * cols].to_vec())
        .collect()
}

fn row_softmax(logits: &Mat, scale: f64) -> Mat {
    logits
        .iter()
        .map(|row| {
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = row.iter().map(|v| ((v - mx) / scale).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        })
        .collect()
}

fn coord(y: usize, x: usize) -> [f64; 8] {
    let (hf, wf) = (H as f64, W as f64);
    let (x0, x1) = (2.0 * x as f64 / wf - 1.0, 2.0 * (x + 1) as f64 / wf - 1.0);
    let (y0, y1) = (2.0 * y as f64 / hf - 1.0, 2.0 * (y + 1) as f64 / hf - 1.0);
    [
        x0,
        y0,
        x1,
        y1,
        (x0 + x1) / 2.0,
        (y0 + y1) / 2.0,
        1.0 / wf,
        1.0 / hf,
    ]
}

pub struct Instance {
    v: Tensor,
    q: Tensor,
    tree: DependencyTree,
    alpha: f64,
    layers: usize,
    w_v: Vec<Tensor>,
    w_l: Vec<Tensor>,
    w_q2: Tensor,
    w_m: Tensor,
    w_x1: Tensor,
    w_x2: Tensor,
    w_z: Vec<Tensor>,
    w_out: Tensor,
    b_out: Tensor,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = Rng::new(seed);
    let layers = (seed % 3) as usize;
    let cat = C_V + C_H + C_L + 8;
    Instance {
        v: rng.uniform_tensor(&[H, W, C_V], 1.0),
        q: rng.uniform_tensor(&[T, C_L], 1.0),
        tree: DependencyTree::random(&mut rng, T),
        alpha: rng.uniform(0.0, 1.0),
        layers,
        w_v: (0..RANK)
            .map(|_| rng.uniform_tensor(&[C_V + 8, C_H], 0.8))
            .collect(),
        w_l: (0..RANK)
            .map(|_| rng.uniform_tensor(&[C_L, C_H], 0.8))
            .collect(),
        w_q2: rng.uniform_tensor(&[C_L, C_H], 1.0),
        w_m: rng.uniform_tensor(&[C_H, C_H], 1.0),
        w_x1: rng.uniform_tensor(&[C_H, C_H], 1.0),
        w_x2: rng.uniform_tensor(&[C_H, C_H], 1.0),
        w_z: (0..layers.max(1))
            .map(|_| rng.uniform_tensor(&[C_H, C_H], 0.7))
            .collect(),
        w_out: rng.uniform_tensor(&[1, 1, cat, C_O], 0.5),
        b_out: rng.uniform_tensor(&[C_O], 0.5),
    }
}

struct Reference {
    b: Mat,
    a: Mat,
    a_t: Mat,
    z_tilde: Mat,
    y: Mat,
}

fn reference(ins: &Instance) -> Reference {
    let hw = H * W;
    let v = mat(&ins.v, hw, C_V);
    let q = mat(&ins.q, T, C_L);
    let l: Vec<f64> = (0..C_L)
        .map(|k| (0..T).map(|t| q[t][k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let p: Mat = (0..hw).map(|i| coord(i / W, i % W).to_vec()).collect();

    // Mutan fusion
    let mut m = vec![vec![0.0; C_H]; hw];
    for r in 0..RANK {
        let wv = mat(&ins.w_v[r], C_V + 8, C_H);
        let wl = mat(&ins.w_l[r], C_L, C_H);
        for i in 0..hw {
            for c in 0..C_H {
                let mut vis = 0.0;
                for k in 0..C_V {
                    vis += v[i][k] * wv[k][c];
                }
                for k in 0..8 {
                    vis += p[i][k] * wv[C_V + k][c];
                }
                let mut lang = 0.0;
                for k in 0..C_L {
                    lang += l[k] * wl[k][c];
                }
                m[i][c] += vis.tanh() * lang.tanh();
            }
        }
    }

    // Eq. 1-2
    let wq2 = mat(&ins.w_q2, C_L, C_H);
    let wm = mat(&ins.w_m, C_H, C_H);
    let mut logits = vec![vec![0.0; hw]; T];
    for t in 0..T {
        for i in 0..hw {
            for c in 0..C_H {
                let mut qa = 0.0;
                for k in 0..C_L {
                    qa += q[t][k] * wq2[k][c];
                }
                let mut ma = 0.0;
                for k in 0..C_H {
                    ma += m[i][k] * wm[k][c];
                }
                logits[t][i] += qa * ma;
            }
        }
    }
    let b = row_softmax(&logits, (C_H as f64).sqrt());

    // Eq. 3
    let mut x = vec![vec![0.0; C_H]; T];
    for t in 0..T {
        for c in 0..C_H {
            for i in 0..hw {
                x[t][c] += b[t][i] * m[i][c];
            }
        }
    }

    // Eq. 4-5
    let wx1 = mat(&ins.w_x1, C_H, C_H);
    let wx2 = mat(&ins.w_x2, C_H, C_H);
    let mut logits = vec![vec![0.0; T]; T];
    for i in 0..T {
        for j in 0..T {
            for c in 0..C_H {
                let mut u = 0.0;
                let mut w = 0.0;
                for k in 0..C_H {
                    u += x[i][k] * wx1[k][c];
                    w += x[j][k] * wx2[k][c];
                }
                logits[i][j] += u * w;
            }
        }
    }
    let a = row_softmax(&logits, (C_H as f64).sqrt());

    // Eq. 6-7
    let heads = ins.tree.heads();
    let mut a_t = vec![vec![0.0; T]; T];
    for i in 0..T {
        for j in 0..T {
            let edge = heads[i] == j + 1 || heads[j] == i + 1;
            let s = if edge { 1.0 } else { ins.alpha };
            a_t[i][j] = a[i][j] * s;
        }
    }

    // Eq. 8
    let mut z = x.clone();
    for w in &ins.w_z[..ins.layers] {
        let wz = mat(w, C_H, C_H);
        let mut next = vec![vec![0.0; C_H]; T];
        for i in 0..T {
            for c in 0..C_H {
                for j in 0..T {
                    let route = a_t[i][j] + if i == j { 1.0 } else { 0.0 };
                    for k in 0..C_H {
                        next[i][c] += route * z[j][k] * wz[k][c];
                    }
                }
            }
        }
        z = next;
    }

    // Eq. 9
    let mut z_tilde = vec![vec![0.0; C_H]; hw];
    for i in 0..hw {
        for c in 0..C_H {
            for t in 0..T {
                z_tilde[i][c] += b[t][i] * z[t][c];
            }
        }
    }

    // Output projection over [V, Z̃, L̂, P]
    let cat = C_V + C_H + C_L + 8;
    let w_out = mat(&ins.w_out, cat, C_O);
    let mut y = vec![ins.b_out.data().to_vec(); hw];
    for i in 0..hw {
        let feat: Vec<f64> = v[i]
            .iter()
            .chain(&z_tilde[i])
            .chain(&l)
            .chain(&p[i])
            .cloned()
            .collect();
        for o in 0..C_O {
            for k in 0..cat {
                y[i][o] += feat[k] * w_out[k][o];
            }
        }
    }
    Reference {
        b,
        a,
        a_t,
        z_tilde,
        y,
    }
}

fn max_diff(got: &Tensor, want: &Mat) -> f64 {
    let flat: Vec<f64> = want.iter().flatten().cloned().collect();
    assert_eq!(got.numel(), flat.len());
    got.data()
        .iter()
        .zip(&flat)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Largest absolute difference between the loop reference and
/// `lscm_forward` over B, A, A_t, Z̃ and Y, per quantity.
pub fn oracle_errors(seed: u64) -> [(&'static str, f64); 5] {
    let ins = instance(seed);
    let want = reference(&ins);

    let mut tape = Tape::new();
    let v = tape.constant(ins.v.clone());
    let q = tape.constant(ins.q.clone());
    let mut c = |t: &Tensor| tape.constant(t.clone());
    let p = LevelParams {
        w_v: ins.w_v.iter().map(&mut c).collect(),
        w_l: ins.w_l.iter().map(&mut c).collect(),
        w_q2: c(&ins.w_q2),
        w_m: c(&ins.w_m),
        w_x1: c(&ins.w_x1),
        w_x2: c(&ins.w_x2),
        w_z: ins.w_z.iter().map(&mut c).collect(),
        w_out: c(&ins.w_out),
        b_out: c(&ins.b_out),
    };
    let out = lscm_forward(
        &mut tape,
        &[v],
        q,
        &ins.tree,
        ins.alpha,
        &[p],
        Depth::Fixed(ins.layers),
    )
    .unwrap();
    let lv = &out.levels[0];
    [
        ("B", max_diff(tape.value(lv.b), &want.b)),
        ("A", max_diff(tape.value(lv.a), &want.a)),
        ("A_t", max_diff(tape.value(lv.a_t), &want.a_t)),
        ("Z~", max_diff(tape.value(lv.z_tilde), &want.z_tilde)),
        ("Y", max_diff(tape.value(lv.y), &want.y)),
    ]
}

/// Worst error over the 20 fixed instances.
pub fn oracle_max_error() -> f64 {
    (0..20u64)
        .flat_map(|k| oracle_errors(1000 + k))
        .map(|(_, e)| e)
        .fold(0.0, f64::max)
}
