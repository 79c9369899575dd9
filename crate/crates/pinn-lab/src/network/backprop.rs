//! Batched forward/reverse pass for training.
//!
//! The forward pass propagates jet channels (value, first and second input
//! derivatives) through the layers for a whole batch of collocation points
//! at once, caching what reverse accumulation needs. The backward pass takes
//! adjoints of the head components (∂loss/∂u, ∂loss/∂u_t, ...) and produces
//! ∂loss/∂θ. This computes the same gradients as recording the jet
//! computation on the scalar tape, at matrix granularity; the two routes are
//! cross-checked in tests.
//!
//! Channel layout mirrors [`crate::autodiff::Jet`]: channel 0 is the value,
//! channels 1..=k the first derivatives, then the upper triangle of second
//! derivatives. Matrices are `[channel][neuron][point]`, point index
//! contiguous.

use crate::error::{Error, Result};

use super::forward::OutputTransform;
use super::NetworkSpec;

fn pair_list(k: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        for j in i..k {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Batched evaluator bound to one architecture, derivative order and output
/// construction.
pub struct BatchKernel {
    spec: NetworkSpec,
    dims: Vec<usize>,
    k: usize,
    order: u8,
    channels: usize,
    pairs: Vec<(usize, usize)>,
    transform: OutputTransform,
}

/// Cached per-layer state of one batched forward pass.
#[derive(Default)]
pub struct BatchCache {
    npts: usize,
    points: Vec<f64>,
    /// Post-activation values per layer, `[channel][neuron][point]`; entry 0
    /// holds the seeded inputs.
    acts: Vec<Vec<f64>>,
    /// Pre-activation jet channels per hidden layer.
    zs: Vec<Vec<f64>>,
    /// Activation derivatives σ', σ'', σ''' at the pre-activation values.
    sd: Vec<Vec<f64>>,
    /// Transformed head `[channel][output][point]`.
    head: Vec<f64>,
    // scratch for backward
    adj_a: Vec<f64>,
    adj_b: Vec<f64>,
}

impl BatchCache {
    pub fn npts(&self) -> usize {
        self.npts
    }
}

impl BatchKernel {
    pub fn new(spec: &NetworkSpec, order: u8, transform: OutputTransform) -> Result<Self> {
        spec.validate()?;
        if order > 2 {
            return Err(Error::Capability(format!(
                "derivative order {order} not supported"
            )));
        }
        if matches!(transform, OutputTransform::StreamFunction) {
            return Err(Error::Capability(
                "stream-function head is evaluation-only, not a training head".into(),
            ));
        }
        if matches!(transform, OutputTransform::HardIc { .. }) && spec.input_width != 1 {
            return Err(Error::Config("hard-IC wrapper requires input width 1".into()));
        }
        let k = spec.input_width;
        let pairs = if order >= 2 { pair_list(k) } else { Vec::new() };
        let channels = 1 + if order >= 1 { k } else { 0 } + pairs.len();
        Ok(Self {
            spec: spec.clone(),
            dims: spec.dims(),
            k,
            order,
            channels,
            pairs,
            transform,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn outputs(&self) -> usize {
        self.spec.output_width
    }

    /// Head component value for output `o`, channel `c`, point `n`.
    pub fn head_value(&self, cache: &BatchCache, o: usize, c: usize, n: usize) -> f64 {
        let w = self.spec.output_width;
        cache.head[(c * w + o) * cache.npts + n]
    }

    /// Channel index of the first derivative on `axis`.
    pub fn d1_channel(&self, axis: usize) -> usize {
        debug_assert!(self.order >= 1 && axis < self.k);
        1 + axis
    }

    /// Channel index of the second derivative on the pair `(i, j)`.
    pub fn d2_channel(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.order >= 2);
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        1 + self.k + self.pairs.iter().position(|&p| p == (i, j)).unwrap()
    }

    /// Run the batched forward pass. `points` is row-major `[npts][k]`.
    pub fn forward(&self, params: &[f64], points: &[f64], cache: &mut BatchCache) {
        assert_eq!(points.len() % self.k, 0);
        let npts = points.len() / self.k;
        let n_layers = self.dims.len() - 1;
        let c = self.channels;
        cache.npts = npts;
        cache.points.clear();
        cache.points.extend_from_slice(points);
        cache.acts.resize(self.dims.len(), Vec::new());
        cache.zs.resize(n_layers.saturating_sub(1), Vec::new());
        cache.sd.resize(n_layers.saturating_sub(1), Vec::new());

        // seeded input jets
        let a0 = &mut cache.acts[0];
        a0.clear();
        a0.resize(c * self.k * npts, 0.0);
        for j in 0..self.k {
            for n in 0..npts {
                a0[j * npts + n] = points[n * self.k + j];
            }
            if self.order >= 1 {
                let ch = 1 + j;
                let row = &mut a0[(ch * self.k + j) * npts..(ch * self.k + j + 1) * npts];
                row.fill(1.0);
            }
        }

        let mut offset = 0usize;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let wmat = &params[offset..offset + n_in * n_out];
            let bias = &params[offset + n_in * n_out..offset + (n_in + 1) * n_out];
            offset += (n_in + 1) * n_out;

            let hidden = l + 1 < n_layers;
            // z = W·a (+ bias on the value channel)
            let mut z = std::mem::take(if hidden {
                &mut cache.zs[l]
            } else {
                &mut cache.acts[n_layers]
            });
            z.clear();
            z.resize(c * n_out * npts, 0.0);
            {
                let a = &cache.acts[l];
                for ch in 0..c {
                    for i in 0..n_out {
                        let zrow = &mut z[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                        if ch == 0 {
                            zrow.fill(bias[i]);
                        }
                        for j in 0..n_in {
                            let w = wmat[i * n_in + j];
                            let arow = &a[(ch * n_in + j) * npts..(ch * n_in + j + 1) * npts];
                            for (zv, av) in zrow.iter_mut().zip(arow) {
                                *zv += w * av;
                            }
                        }
                    }
                }
            }

            if !hidden {
                cache.acts[n_layers] = z;
                break;
            }

            // activation chain through the jet channels
            let sd = &mut cache.sd[l];
            sd.clear();
            sd.resize(3 * n_out * npts, 0.0);
            let mut out = std::mem::take(&mut cache.acts[l + 1]);
            out.clear();
            out.resize(c * n_out * npts, 0.0);
            let act = self.spec.activation;
            for i in 0..n_out {
                let base = i * npts;
                for n in 0..npts {
                    let v = z[base + n];
                    let (f, d1, d2, d3) = act.chain4(v);
                    out[base + n] = f;
                    sd[base + n] = d1;
                    sd[(n_out + i) * npts + n] = d2;
                    sd[(2 * n_out + i) * npts + n] = d3;
                }
            }
            if self.order >= 1 {
                for ch in 1..=self.k {
                    for i in 0..n_out {
                        let zrow = &z[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                        let d1row = &sd[i * npts..(i + 1) * npts];
                        let orow =
                            &mut out[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                        for n in 0..npts {
                            orow[n] = d1row[n] * zrow[n];
                        }
                    }
                }
            }
            if self.order >= 2 {
                for (pi, &(pa, pb)) in self.pairs.iter().enumerate() {
                    let ch = 1 + self.k + pi;
                    for i in 0..n_out {
                        let hrow = &z[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                        let ga = &z[((1 + pa) * n_out + i) * npts..((1 + pa) * n_out + i + 1) * npts];
                        let gb = &z[((1 + pb) * n_out + i) * npts..((1 + pb) * n_out + i + 1) * npts];
                        let d1row = &sd[i * npts..(i + 1) * npts];
                        let d2row = &sd[(n_out + i) * npts..(n_out + i + 1) * npts];
                        let orow =
                            &mut out[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                        for n in 0..npts {
                            orow[n] = d1row[n] * hrow[n] + d2row[n] * ga[n] * gb[n];
                        }
                    }
                }
            }
            cache.acts[l + 1] = out;
            cache.zs[l] = z;
        }

        self.apply_head(cache);
    }

    fn apply_head(&self, cache: &mut BatchCache) {
        let n_layers = self.dims.len() - 1;
        let n_out = self.dims[n_layers];
        let npts = cache.npts;
        let c = self.channels;
        cache.head.clear();
        match self.transform {
            OutputTransform::Identity => {
                cache.head.extend_from_slice(&cache.acts[n_layers]);
            }
            OutputTransform::HardIc { y0 } => {
                // ŷ = y0 + t·y: value, then d1 = y + t·y_t, d2 = 2·y_t + t·y_tt
                cache.head.resize(c * n_out * npts, 0.0);
                let a = &cache.acts[n_layers];
                for o in 0..n_out {
                    for n in 0..npts {
                        let t = cache.points[n];
                        let y = a[o * npts + n];
                        cache.head[o * npts + n] = y0 + t * y;
                        if self.order >= 1 {
                            let yt = a[(n_out + o) * npts + n];
                            cache.head[(n_out + o) * npts + n] = y + t * yt;
                            if self.order >= 2 {
                                let ytt = a[(2 * n_out + o) * npts + n];
                                cache.head[(2 * n_out + o) * npts + n] = 2.0 * yt + t * ytt;
                            }
                        }
                    }
                }
            }
            OutputTransform::StreamFunction => unreachable!("rejected in constructor"),
        }
    }

    /// Reverse pass: accumulate ∂loss/∂θ into `grad` given head adjoints in
    /// the same `[channel][output][point]` layout as the head.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &BatchCache,
        head_adj: &[f64],
        grad: &mut [f64],
        scratch: &mut BatchCache,
    ) {
        let n_layers = self.dims.len() - 1;
        let npts = cache.npts;
        let c = self.channels;
        let n_out_final = self.dims[n_layers];
        assert_eq!(head_adj.len(), c * n_out_final * npts);
        assert_eq!(grad.len(), params.len());

        let adj_out = &mut scratch.adj_a;
        adj_out.clear();
        match self.transform {
            OutputTransform::Identity => adj_out.extend_from_slice(head_adj),
            OutputTransform::HardIc { y0: _ } => {
                adj_out.resize(c * n_out_final * npts, 0.0);
                for o in 0..n_out_final {
                    for n in 0..npts {
                        let t = cache.points[n];
                        let q0 = head_adj[o * npts + n];
                        let q1 = if self.order >= 1 {
                            head_adj[(n_out_final + o) * npts + n]
                        } else {
                            0.0
                        };
                        let q2 = if self.order >= 2 {
                            head_adj[(2 * n_out_final + o) * npts + n]
                        } else {
                            0.0
                        };
                        adj_out[o * npts + n] = t * q0 + q1;
                        if self.order >= 1 {
                            adj_out[(n_out_final + o) * npts + n] = t * q1 + 2.0 * q2;
                            if self.order >= 2 {
                                adj_out[(2 * n_out_final + o) * npts + n] = t * q2;
                            }
                        }
                    }
                }
            }
            OutputTransform::StreamFunction => unreachable!(),
        }

        // Walk the layers backwards. `adj_out` holds the adjoint of the
        // current layer's post-activation output (for the output layer the
        // activation is the identity).
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0usize;
        for l in 0..n_layers {
            offsets.push(off);
            off += (self.dims[l] + 1) * self.dims[l + 1];
        }

        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let offset = offsets[l];
            let hidden = l + 1 < n_layers;

            // activation backward: adjoint of post-activation → adjoint of z
            if hidden {
                let z = &cache.zs[l];
                let sd = &cache.sd[l];
                let zbar = &mut scratch.adj_b;
                zbar.clear();
                zbar.resize(c * n_out * npts, 0.0);
                let adj = &scratch.adj_a;
                for i in 0..n_out {
                    let d1 = &sd[i * npts..(i + 1) * npts];
                    let d2 = &sd[(n_out + i) * npts..(n_out + i + 1) * npts];
                    let d3 = &sd[(2 * n_out + i) * npts..(2 * n_out + i + 1) * npts];
                    // value channel
                    {
                        let abar = &adj[i * npts..(i + 1) * npts];
                        let zb = &mut zbar[i * npts..(i + 1) * npts];
                        for n in 0..npts {
                            zb[n] = abar[n] * d1[n];
                        }
                    }
                    if self.order >= 1 {
                        for ax in 0..self.k {
                            let ch = 1 + ax;
                            let abar = &adj[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                            let g = &z[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                            for n in 0..npts {
                                // ∂(σ'·g)/∂v = σ''·g ; ∂(σ'·g)/∂g = σ'
                                zbar[i * npts + n] += abar[n] * d2[n] * g[n];
                                zbar[(ch * n_out + i) * npts + n] += abar[n] * d1[n];
                            }
                        }
                    }
                    if self.order >= 2 {
                        for (pi, &(pa, pb)) in self.pairs.iter().enumerate() {
                            let ch = 1 + self.k + pi;
                            let abar = &adj[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                            let h = &z[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                            let ga_ch = 1 + pa;
                            let gb_ch = 1 + pb;
                            for n in 0..npts {
                                let ga = z[(ga_ch * n_out + i) * npts + n];
                                let gb = z[(gb_ch * n_out + i) * npts + n];
                                // out = σ'·h + σ''·ga·gb
                                zbar[i * npts + n] +=
                                    abar[n] * (d2[n] * h[n] + d3[n] * ga * gb);
                                zbar[(ch * n_out + i) * npts + n] += abar[n] * d1[n];
                                zbar[(ga_ch * n_out + i) * npts + n] += abar[n] * d2[n] * gb;
                                zbar[(gb_ch * n_out + i) * npts + n] += abar[n] * d2[n] * ga;
                            }
                        }
                    }
                }
                std::mem::swap(&mut scratch.adj_a, &mut scratch.adj_b);
            }
            let zbar = &scratch.adj_a;

            // affine backward
            let a_prev = &cache.acts[l];
            let (wgrad, rest) = grad[offset..].split_at_mut(n_in * n_out);
            let bgrad = &mut rest[..n_out];
            for ch in 0..c {
                for i in 0..n_out {
                    let zrow = &zbar[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                    for j in 0..n_in {
                        let arow = &a_prev[(ch * n_in + j) * npts..(ch * n_in + j + 1) * npts];
                        let mut s = 0.0;
                        for n in 0..npts {
                            s += zrow[n] * arow[n];
                        }
                        wgrad[i * n_in + j] += s;
                    }
                    if ch == 0 {
                        bgrad[i] += zrow.iter().sum::<f64>();
                    }
                }
            }

            if l > 0 {
                // propagate to previous activations: ā_prev = Wᵀ·z̄
                let wmat = &params[offset..offset + n_in * n_out];
                let abar = &mut scratch.adj_b;
                abar.clear();
                abar.resize(c * n_in * npts, 0.0);
                for ch in 0..c {
                    for i in 0..n_out {
                        let zrow =
                            &scratch.adj_a[(ch * n_out + i) * npts..(ch * n_out + i + 1) * npts];
                        for j in 0..n_in {
                            let w = wmat[i * n_in + j];
                            let arow =
                                &mut abar[(ch * n_in + j) * npts..(ch * n_in + j + 1) * npts];
                            for n in 0..npts {
                                arow[n] += w * zrow[n];
                            }
                        }
                    }
                }
                std::mem::swap(&mut scratch.adj_a, &mut scratch.adj_b);
            }
        }
    }
}
