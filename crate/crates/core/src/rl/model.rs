//! Pre-norm transformer encoder with a CLS classifier head, forward and
//! backward written out by hand over a flat parameter vector.

use ndarray::{s, Array1, Array2, Array3, Array4, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::encode::{SEQ_LEN, VOCAB};

const LN_EPS: f64 = 1e-5;
const INIT_STD: f64 = 0.02;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid architecture: {0}")]
    Arch(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSpec {
    pub layers: usize,
    pub heads: usize,
    pub model_dim: usize,
    pub ff_dim: usize,
    #[serde(default = "default_vocab")]
    pub vocab: usize,
    #[serde(default = "default_seq_len")]
    pub seq_len: usize,
}

fn default_vocab() -> usize {
    VOCAB
}

fn default_seq_len() -> usize {
    SEQ_LEN
}

impl Default for ArchSpec {
    fn default() -> Self {
        ArchSpec {
            layers: 2,
            heads: 4,
            model_dim: 64,
            ff_dim: 128,
            vocab: VOCAB,
            seq_len: SEQ_LEN,
        }
    }
}

impl ArchSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Arch(m.to_string()));
        if self.layers == 0 || self.heads == 0 || self.model_dim == 0 || self.ff_dim == 0 {
            return bad("all sizes must be positive");
        }
        if !self.model_dim.is_multiple_of(self.heads) {
            return bad("model_dim must be divisible by heads");
        }
        if self.seq_len != SEQ_LEN {
            return bad("seq_len is fixed at 68 by the token scheme");
        }
        if self.vocab != VOCAB {
            return bad("vocab is fixed at 34 by the token scheme");
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.model_dim / self.heads
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerIdx {
    ln1_g: usize,
    ln1_b: usize,
    wq: usize,
    bq: usize,
    wk: usize,
    bk: usize,
    wv: usize,
    bv: usize,
    wo: usize,
    bo: usize,
    ln2_g: usize,
    ln2_b: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

/// Named tensors laid out back to back in one vector.
#[derive(Debug, Clone)]
pub struct Layout {
    pub tensors: Vec<TensorInfo>,
    pub total: usize,
    tok: usize,
    pos: usize,
    layers: Vec<LayerIdx>,
    lnf_g: usize,
    lnf_b: usize,
    head_w: usize,
    head_b: usize,
}

impl Layout {
    pub fn new(arch: &ArchSpec) -> Layout {
        let mut tensors = Vec::new();
        let mut total = 0;
        let mut add = |name: String, shape: Vec<usize>| {
            let info = TensorInfo {
                name,
                shape,
                offset: total,
            };
            total += info.len();
            tensors.push(info);
            tensors.len() - 1
        };
        let (d, f) = (arch.model_dim, arch.ff_dim);
        let tok = add("tok_emb".into(), vec![arch.vocab, d]);
        let pos = add("pos_emb".into(), vec![arch.seq_len, d]);
        let mut layers = Vec::new();
        for l in 0..arch.layers {
            let n = |s: &str| format!("layer{l}.{s}");
            layers.push(LayerIdx {
                ln1_g: add(n("ln1_g"), vec![d]),
                ln1_b: add(n("ln1_b"), vec![d]),
                wq: add(n("wq"), vec![d, d]),
                bq: add(n("bq"), vec![d]),
                wk: add(n("wk"), vec![d, d]),
                bk: add(n("bk"), vec![d]),
                wv: add(n("wv"), vec![d, d]),
                bv: add(n("bv"), vec![d]),
                wo: add(n("wo"), vec![d, d]),
                bo: add(n("bo"), vec![d]),
                ln2_g: add(n("ln2_g"), vec![d]),
                ln2_b: add(n("ln2_b"), vec![d]),
                w1: add(n("w1"), vec![d, f]),
                b1: add(n("b1"), vec![f]),
                w2: add(n("w2"), vec![f, d]),
                b2: add(n("b2"), vec![d]),
            });
        }
        let lnf_g = add("lnf_g".into(), vec![d]);
        let lnf_b = add("lnf_b".into(), vec![d]);
        let head_w = add("head_w".into(), vec![d, 2]);
        let head_b = add("head_b".into(), vec![2]);
        Layout {
            tensors,
            total,
            tok,
            pos,
            layers,
            lnf_g,
            lnf_b,
            head_w,
            head_b,
        }
    }

    fn range(&self, t: usize) -> std::ops::Range<usize> {
        let info = &self.tensors[t];
        info.offset..info.offset + info.len()
    }

    fn m<'a>(&self, data: &'a [f64], t: usize) -> ArrayView2<'a, f64> {
        let info = &self.tensors[t];
        ArrayView2::from_shape((info.shape[0], info.shape[1]), &data[self.range(t)])
            .expect("layout shape")
    }

    fn v<'a>(&self, data: &'a [f64], t: usize) -> ArrayView1<'a, f64> {
        ArrayView1::from(&data[self.range(t)])
    }

    fn add_m(&self, grad: &mut [f64], t: usize, g: &Array2<f64>) {
        for (dst, src) in grad[self.range(t)].iter_mut().zip(g.iter()) {
            *dst += src;
        }
    }

    fn add_v(&self, grad: &mut [f64], t: usize, g: &Array1<f64>) {
        for (dst, src) in grad[self.range(t)].iter_mut().zip(g.iter()) {
            *dst += src;
        }
    }
}

/// Parameters of one manager network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: ArchSpec,
    pub data: Vec<f64>,
}

struct LayerCache {
    xhat1: Array2<f64>,
    rstd1: Array1<f64>,
    a: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    probs: Array3<f64>,
    o: Array2<f64>,
    xhat2: Array2<f64>,
    rstd2: Array1<f64>,
    b: Array2<f64>,
    u: Array2<f64>,
    f: Array2<f64>,
}

struct Cache {
    tokens: Vec<u8>,
    layers: Vec<LayerCache>,
    xhatf: Array1<f64>,
    rstdf: f64,
    z: Array1<f64>,
}

/// Output of a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: [f64; 2],
    /// layers x heads x seq x seq, rows softmax-normalized.
    pub attention: Array4<f64>,
}

fn layer_norm(x: &Array2<f64>, g: ArrayView1<f64>, b: ArrayView1<f64>) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    let n = x.ncols() as f64;
    let mut xhat = x.clone();
    let mut rstd = Array1::zeros(x.nrows());
    for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        *r = 1.0 / (var + LN_EPS).sqrt();
        row.mapv_inplace(|v| (v - mean) * *r);
    }
    let y = &xhat * &g + b;
    (y, xhat, rstd)
}

/// Gradient through normalization for one row; `dxhat` is the gradient of
/// the normalized row.
fn ln_row_backward(dxhat: ArrayView1<f64>, xhat: ArrayView1<f64>, rstd: f64) -> Array1<f64> {
    let n = dxhat.len() as f64;
    let mean_d = dxhat.sum() / n;
    let mean_dx = dxhat.dot(&xhat) / n;
    (&dxhat - mean_d - &(&xhat * mean_dx)) * rstd
}

fn ln_backward(
    dy: &Array2<f64>,
    xhat: &Array2<f64>,
    rstd: &Array1<f64>,
    g: ArrayView1<f64>,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let dg = (dy * xhat).sum_axis(Axis(0));
    let db = dy.sum_axis(Axis(0));
    let dxhat = dy * &g;
    let mut dx = Array2::zeros(dy.raw_dim());
    for i in 0..dy.nrows() {
        dx.row_mut(i)
            .assign(&ln_row_backward(dxhat.row(i), xhat.row(i), rstd[i]));
    }
    (dx, dg, db)
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + 0.044715 * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

fn softmax_rows(s: &mut Array2<f64>) {
    for mut row in s.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl ModelParams {
    /// Weights and embeddings from N(0, 0.02^2), biases 0, norm gains 1.
    pub fn init(arch: ArchSpec, seed: u64) -> Result<ModelParams, ModelError> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        let mut data = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        for info in &layout.tensors {
            let slot = &mut data[info.offset..info.offset + info.len()];
            let leaf = info.name.rsplit('.').next().unwrap_or(&info.name);
            if leaf.ends_with("_g") {
                slot.fill(1.0);
            } else if info.shape.len() == 2 {
                for v in slot.iter_mut() {
                    *v = normal.sample(&mut rng);
                }
            }
        }
        Ok(ModelParams { arch, data })
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.arch)
    }

    pub fn check_finite(&self) -> Result<(), ModelError> {
        let layout = self.layout();
        for info in &layout.tensors {
            let slot = &self.data[info.offset..info.offset + info.len()];
            if slot.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite(info.name.clone()));
            }
        }
        Ok(())
    }

    pub fn forward(&self, tokens: &[u8]) -> Result<ForwardOutput, ModelError> {
        let layout = self.layout();
        let (logits, cache) = self.forward_cached(&layout, tokens)?;
        let a = &self.arch;
        let mut attention = Array4::zeros((a.layers, a.heads, a.seq_len, a.seq_len));
        for (l, lc) in cache.layers.iter().enumerate() {
            attention.slice_mut(s![l, .., .., ..]).assign(&lc.probs);
        }
        Ok(ForwardOutput { logits, attention })
    }

    pub fn logits(&self, tokens: &[u8]) -> Result<[f64; 2], ModelError> {
        let layout = self.layout();
        self.forward_cached(&layout, tokens).map(|(l, _)| l)
    }

    fn forward_cached(&self, layout: &Layout, tokens: &[u8]) -> Result<([f64; 2], Cache), ModelError> {
        let arch = &self.arch;
        assert_eq!(tokens.len(), arch.seq_len, "token sequence length");
        let data = &self.data;
        let d = arch.model_dim;
        let dh = arch.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let tok = layout.m(data, layout.tok);
        let pos = layout.m(data, layout.pos);
        let mut h = pos.to_owned();
        for (t, &id) in tokens.iter().enumerate() {
            let mut row = h.row_mut(t);
            row += &tok.row(id as usize);
        }
        let mut layers = Vec::with_capacity(arch.layers);
        for li in &layout.layers {
            let (a, xhat1, rstd1) = layer_norm(&h, layout.v(data, li.ln1_g), layout.v(data, li.ln1_b));
            let q = a.dot(&layout.m(data, li.wq)) + layout.v(data, li.bq);
            let k = a.dot(&layout.m(data, li.wk)) + layout.v(data, li.bk);
            let v = a.dot(&layout.m(data, li.wv)) + layout.v(data, li.bv);
            let mut probs = Array3::zeros((arch.heads, arch.seq_len, arch.seq_len));
            let mut o = Array2::zeros((arch.seq_len, d));
            for hd in 0..arch.heads {
                let cols = s![.., hd * dh..(hd + 1) * dh];
                let mut sc = q.slice(cols).dot(&k.slice(cols).t()) * scale;
                softmax_rows(&mut sc);
                o.slice_mut(cols).assign(&sc.dot(&v.slice(cols)));
                probs.slice_mut(s![hd, .., ..]).assign(&sc);
            }
            h = &h + &(o.dot(&layout.m(data, li.wo)) + layout.v(data, li.bo));
            let (b, xhat2, rstd2) = layer_norm(&h, layout.v(data, li.ln2_g), layout.v(data, li.ln2_b));
            let u = b.dot(&layout.m(data, li.w1)) + layout.v(data, li.b1);
            let f = u.mapv(gelu);
            h = &h + &(f.dot(&layout.m(data, li.w2)) + layout.v(data, li.b2));
            layers.push(LayerCache {
                xhat1,
                rstd1,
                a,
                q,
                k,
                v,
                probs,
                o,
                xhat2,
                rstd2,
                b,
                u,
                f,
            });
        }
        let cls = h.slice(s![0..1, ..]).to_owned();
        let (z, xhatf, rstdf) = layer_norm(&cls, layout.v(data, layout.lnf_g), layout.v(data, layout.lnf_b));
        let z = z.row(0).to_owned();
        let out = z.dot(&layout.m(data, layout.head_w)) + layout.v(data, layout.head_b);
        let logits = [out[0], out[1]];
        if !logits.iter().all(|v| v.is_finite()) {
            return Err(ModelError::NonFinite("logits".into()));
        }
        Ok((
            logits,
            Cache {
                tokens: tokens.to_vec(),
                layers,
                xhatf: xhatf.row(0).to_owned(),
                rstdf: rstdf[0],
                z,
            },
        ))
    }

    fn backward(&self, layout: &Layout, cache: &Cache, dlogits: [f64; 2], grad: &mut [f64]) {
        let arch = &self.arch;
        let data = &self.data;
        let dh = arch.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let dl = Array1::from(vec![dlogits[0], dlogits[1]]);

        let head_w = layout.m(data, layout.head_w);
        let dhead_w = cache
            .z
            .view()
            .insert_axis(Axis(1))
            .dot(&dl.view().insert_axis(Axis(0)));
        layout.add_m(grad, layout.head_w, &dhead_w);
        layout.add_v(grad, layout.head_b, &dl);
        let dz = head_w.dot(&dl);
        let gf = layout.v(data, layout.lnf_g);
        layout.add_v(grad, layout.lnf_g, &(&dz * &cache.xhatf));
        layout.add_v(grad, layout.lnf_b, &dz);
        let dcls = ln_row_backward((&dz * &gf).view(), cache.xhatf.view(), cache.rstdf);
        let mut dh_out = Array2::zeros((arch.seq_len, arch.model_dim));
        dh_out.row_mut(0).assign(&dcls);

        for (li, lc) in layout.layers.iter().zip(&cache.layers).rev() {
            // feed-forward block
            layout.add_m(grad, li.w2, &lc.f.t().dot(&dh_out));
            layout.add_v(grad, li.b2, &dh_out.sum_axis(Axis(0)));
            let df = dh_out.dot(&layout.m(data, li.w2).t());
            let du = &df * &lc.u.mapv(gelu_grad);
            layout.add_m(grad, li.w1, &lc.b.t().dot(&du));
            layout.add_v(grad, li.b1, &du.sum_axis(Axis(0)));
            let db = du.dot(&layout.m(data, li.w1).t());
            let (dx2, dg2, dbeta2) = ln_backward(&db, &lc.xhat2, &lc.rstd2, layout.v(data, li.ln2_g));
            layout.add_v(grad, li.ln2_g, &dg2);
            layout.add_v(grad, li.ln2_b, &dbeta2);
            let dh_mid = &dh_out + &dx2;

            // attention block
            layout.add_m(grad, li.wo, &lc.o.t().dot(&dh_mid));
            layout.add_v(grad, li.bo, &dh_mid.sum_axis(Axis(0)));
            let d_o = dh_mid.dot(&layout.m(data, li.wo).t());
            let mut dq = Array2::zeros(lc.q.raw_dim());
            let mut dk = Array2::zeros(lc.k.raw_dim());
            let mut dv = Array2::zeros(lc.v.raw_dim());
            for hd in 0..arch.heads {
                let cols = s![.., hd * dh..(hd + 1) * dh];
                let p = lc.probs.slice(s![hd, .., ..]);
                let do_h = d_o.slice(cols);
                let dp = do_h.dot(&lc.v.slice(cols).t());
                dv.slice_mut(cols).assign(&p.t().dot(&do_h));
                let row_dot = (&dp * &p).sum_axis(Axis(1)).insert_axis(Axis(1));
                let ds = (&dp - &row_dot) * p * scale;
                dq.slice_mut(cols).assign(&ds.dot(&lc.k.slice(cols)));
                dk.slice_mut(cols).assign(&ds.t().dot(&lc.q.slice(cols)));
            }
            let at = lc.a.t();
            layout.add_m(grad, li.wq, &at.dot(&dq));
            layout.add_v(grad, li.bq, &dq.sum_axis(Axis(0)));
            layout.add_m(grad, li.wk, &at.dot(&dk));
            layout.add_v(grad, li.bk, &dk.sum_axis(Axis(0)));
            layout.add_m(grad, li.wv, &at.dot(&dv));
            layout.add_v(grad, li.bv, &dv.sum_axis(Axis(0)));
            let da = dq.dot(&layout.m(data, li.wq).t())
                + dk.dot(&layout.m(data, li.wk).t())
                + dv.dot(&layout.m(data, li.wv).t());
            let (dx1, dg1, dbeta1) = ln_backward(&da, &lc.xhat1, &lc.rstd1, layout.v(data, li.ln1_g));
            layout.add_v(grad, li.ln1_g, &dg1);
            layout.add_v(grad, li.ln1_b, &dbeta1);
            dh_out = &dh_mid + &dx1;
        }

        let pos = layout.range(layout.pos);
        for (dst, src) in grad[pos].iter_mut().zip(dh_out.iter()) {
            *dst += src;
        }
        let tok_off = layout.tensors[layout.tok].offset;
        let d = arch.model_dim;
        for (t, &id) in cache.tokens.iter().enumerate() {
            let base = tok_off + id as usize * d;
            for (dst, src) in grad[base..base + d].iter_mut().zip(dh_out.row(t).iter()) {
                *dst += src;
            }
        }
    }

    /// Weighted cross-entropy loss of one example and its gradient added
    /// into `grad`, scaled by `coef`. `label` is 0 or 1.
    pub(crate) fn example_grad(
        &self,
        layout: &Layout,
        tokens: &[u8],
        label: usize,
        coef: f64,
        grad: &mut [f64],
    ) -> Result<(f64, bool), ModelError> {
        let (logits, cache) = self.forward_cached(layout, tokens)?;
        let p = softmax2(logits);
        let ce = -p[label].ln();
        let mut dl = p;
        dl[label] -= 1.0;
        self.backward(layout, &cache, [dl[0] * coef, dl[1] * coef], grad);
        let predicted = if logits[1] > logits[0] { 1 } else { 0 };
        Ok((ce, predicted == label))
    }
}

pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}
