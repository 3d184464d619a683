use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Var};
use crate::encoding::toy::ToyEncoder;
use crate::encoding::vocab::{tokenize, Vocabulary};
use crate::encoding::Role;
use crate::error::{Error, Result};
use crate::fusion::{Example, ModelConfig, StreamInput, Variant};
use crate::nn::attention::{MultiHeadAttention, TokenAttention};
use crate::nn::linear::Mlp;
use crate::params::{ParamId, ParamStore};
use crate::tensor::Matrix;
use crate::training::aux::AuxClassifiers;

/// One interactor branch with its usability heads.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    /// `CA(C, R, R)`; self-attention over the surviving stream when one LLM
    /// stream is ablated.
    pub c_to_r: MultiHeadAttention,
    /// `CA(R, C, C)`; absent in the self-attention wiring.
    pub r_to_c: Option<MultiHeadAttention>,
    /// `d→d→d/2→1`, produces the fusion weight `w`.
    pub weight_mapper: Mlp,
    /// `d→1`, produces the supervised score `ŵ`.
    pub supervision: Mlp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactGuard {
    pub config: ModelConfig,
    pub news_encoder: Option<ToyEncoder>,
    pub llm_encoder: Option<ToyEncoder>,
    pub branches: Vec<Branch>,
    /// Two token attentions over N, or the single pooling attention of a
    /// single-stream variant.
    pub news_attention: Vec<TokenAttention>,
    pub classifier: Mlp,
}

/// Tape handles of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardVars {
    pub news: Option<Var>,
    pub content: Option<Var>,
    pub rationale: Option<Var>,
    pub f_c_to_r: Vec<Var>,
    pub f_r_to_c: Vec<Var>,
    pub w: Vec<Var>,
    pub w_hat: Vec<Var>,
    pub f_llm: Option<Var>,
    pub f_n: Option<Var>,
    pub f_cls: Var,
    pub y_hat: Var,
}

/// Every intermediate feature of a forward pass, as plain values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionTrace {
    pub f_c_to_r: Vec<Vec<f64>>,
    pub f_r_to_c: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub w_hat: Vec<f64>,
    pub f_llm: Vec<f64>,
    pub f_n: Vec<f64>,
    pub f_cls: Vec<f64>,
    pub y_hat: f64,
}

impl FactGuard {
    pub fn new(store: &mut ParamStore, config: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let (d, h, act, v) = (config.d, config.heads, config.activation, config.variant);
        let mut make_encoder = |store: &mut ParamStore, name: &str, needed: bool| -> Result<Option<ToyEncoder>> {
            match (&config.encoder, needed) {
                (Some(ec), true) => Ok(Some(ToyEncoder::new(store, name, ec, d, h, act, rng)?)),
                _ => Ok(None),
            }
        };
        let news_encoder = make_encoder(store, "news_encoder", v.uses(Role::News))?;
        let llm_encoder = make_encoder(
            store,
            "llm_encoder",
            v.uses(Role::TopicContent) || v.uses(Role::Rationale),
        )?;

        let mut branches = Vec::new();
        if v.single_stream().is_none() {
            for i in 1..=2 {
                let p = format!("branch{i}");
                let c_to_r = MultiHeadAttention::new(store, &format!("{p}.c_to_r"), d, h, rng)?;
                let r_to_c = match v.surviving_llm_stream() {
                    Some(_) => None,
                    None => Some(MultiHeadAttention::new(store, &format!("{p}.r_to_c"), d, h, rng)?),
                };
                let weight_mapper =
                    Mlp::new(store, &format!("{p}.weight_mapper"), &[d, d, d / 2, 1], act, rng)?;
                let supervision = Mlp::new(store, &format!("{p}.supervision"), &[d, 1], act, rng)?;
                branches.push(Branch {
                    c_to_r,
                    r_to_c,
                    weight_mapper,
                    supervision,
                });
            }
        }

        let news_attention = if v.single_stream().is_some() {
            vec![TokenAttention::new(store, "stream_attn", d, rng)]
        } else if v.uses_news_features() {
            (1..=2)
                .map(|j| TokenAttention::new(store, &format!("news_attn{j}"), d, rng))
                .collect()
        } else {
            Vec::new()
        };
        let width = v.classifier_width() * d;
        let classifier = Mlp::new(store, "classifier", &[width, d, 1], act, rng)?;
        Ok(Self {
            config,
            news_encoder,
            llm_encoder,
            branches,
            news_attention,
            classifier,
        })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn d(&self) -> usize {
        self.config.d
    }

    /// Classifier input width (3d for the full model).
    pub fn feature_width(&self) -> usize {
        self.classifier.in_dim()
    }

    fn encoder_for(&self, role: Role) -> Option<&ToyEncoder> {
        match role {
            Role::News => self.news_encoder.as_ref(),
            Role::TopicContent | Role::Rationale => self.llm_encoder.as_ref(),
        }
    }

    /// Encodes one input stream onto the tape as a `[T×d]` matrix.
    pub fn encode_stream(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        input: &StreamInput,
        role: Role,
    ) -> Result<Var> {
        match input {
            StreamInput::Encoded(m) => {
                if m.cols() != self.d() {
                    return Err(Error::shape(format!(
                        "{} encoding has width {}, model has d={}",
                        role.as_str(),
                        m.cols(),
                        self.d()
                    )));
                }
                if m.rows() == 0 {
                    return Err(Error::arg(format!("empty {} sequence", role.as_str())));
                }
                Ok(tape.leaf(m.clone()))
            }
            StreamInput::Tokens(ids) => {
                let enc = self.encoder_for(role).ok_or_else(|| {
                    Error::config("token input given to a model without text encoders")
                })?;
                enc.forward(tape, store, ids)
            }
        }
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, ex: &Example) -> Result<ForwardVars> {
        let v = self.variant();
        let mut enc = |role: Role| -> Result<Option<Var>> {
            if v.uses(role) {
                Ok(Some(self.encode_stream(tape, store, ex.stream(role), role)?))
            } else {
                Ok(None)
            }
        };
        let (news, content, rationale) = (enc(Role::News)?, enc(Role::TopicContent)?, enc(Role::Rationale)?);
        let stream = |role: Role| match role {
            Role::News => news,
            Role::TopicContent => content,
            Role::Rationale => rationale,
        };

        if let Some(role) = v.single_stream() {
            let s = stream(role).expect("single stream encoded");
            let f = self.news_attention[0].forward(tape, store, s)?;
            let logit = self.classifier.forward(tape, store, f)?;
            let y_hat = tape.sigmoid(logit);
            return Ok(ForwardVars {
                news,
                content,
                rationale,
                f_c_to_r: Vec::new(),
                f_r_to_c: Vec::new(),
                w: Vec::new(),
                w_hat: Vec::new(),
                f_llm: None,
                f_n: None,
                f_cls: f,
                y_hat,
            });
        }

        let mut f_c_to_r = Vec::with_capacity(2);
        let mut f_r_to_c = Vec::with_capacity(2);
        let mut w = Vec::with_capacity(2);
        let mut w_hat = Vec::with_capacity(2);
        let mut weighted = Vec::with_capacity(2);
        for b in &self.branches {
            let (fc, fr) = match v.surviving_llm_stream() {
                Some(role) => {
                    let s = stream(role).expect("surviving stream encoded");
                    let sa = b.c_to_r.forward(tape, store, s, s, s)?;
                    let f = tape.mean_rows(sa)?;
                    (f, f)
                }
                None => {
                    let (c, r) = (content.expect("C encoded"), rationale.expect("R encoded"));
                    let cr = b.c_to_r.forward(tape, store, c, r, r)?;
                    let fc = tape.mean_rows(cr)?;
                    let r_to_c = b.r_to_c.as_ref().expect("cross attention R->C");
                    let rc = r_to_c.forward(tape, store, r, c, c)?;
                    (fc, tape.mean_rows(rc)?)
                }
            };
            let s = b.supervision.forward(tape, store, fr)?;
            let wh = tape.sigmoid(s);
            let wi = if v.learns_usability() {
                let m = b.weight_mapper.forward(tape, store, fr)?;
                tape.sigmoid(m)
            } else {
                tape.leaf(Matrix::scalar(1.0))
            };
            weighted.push(tape.scale_by(fc, wi)?);
            f_c_to_r.push(fc);
            f_r_to_c.push(fr);
            w.push(wi);
            w_hat.push(wh);
        }
        let f_llm = if v.llm_width() == 2 {
            tape.hconcat(&weighted)?
        } else {
            tape.add(weighted[0], weighted[1])?
        };

        let f_n = if v.uses_news_features() {
            let n = news.expect("N encoded");
            let a1 = self.news_attention[0].forward(tape, store, n)?;
            let a2 = self.news_attention[1].forward(tape, store, n)?;
            let sum = tape.add(a1, a2)?;
            Some(tape.scale(sum, 0.5))
        } else {
            None
        };
        let f_cls = match f_n {
            Some(fnews) => tape.hconcat(&[fnews, f_llm])?,
            None => f_llm,
        };
        let logit = self.classifier.forward(tape, store, f_cls)?;
        let y_hat = tape.sigmoid(logit);
        Ok(ForwardVars {
            news,
            content,
            rationale,
            f_c_to_r,
            f_r_to_c,
            w,
            w_hat,
            f_llm: Some(f_llm),
            f_n,
            f_cls,
            y_hat,
        })
    }

    pub fn trace(tape: &Tape, vars: &ForwardVars) -> FusionTrace {
        let vec = |v: Var| tape.value(v).as_slice().to_vec();
        FusionTrace {
            f_c_to_r: vars.f_c_to_r.iter().map(|&v| vec(v)).collect(),
            f_r_to_c: vars.f_r_to_c.iter().map(|&v| vec(v)).collect(),
            w: vars.w.iter().map(|&v| tape.scalar(v)).collect(),
            w_hat: vars.w_hat.iter().map(|&v| tape.scalar(v)).collect(),
            f_llm: vars.f_llm.map(vec).unwrap_or_default(),
            f_n: vars.f_n.map(vec).unwrap_or_default(),
            f_cls: vec(vars.f_cls),
            y_hat: tape.scalar(vars.y_hat),
        }
    }

    /// Parameters of the named branch (1-based).
    pub fn branch_param_ids(&self, store: &ParamStore, branch: usize) -> Vec<ParamId> {
        store.ids_with_prefix(&format!("branch{branch}.")).collect()
    }
}

/// `[w₁·f₁; w₂·f₂]`.
pub fn fuse_llm(w: [f64; 2], f: [&[f64]; 2]) -> Result<Vec<f64>> {
    if f[0].len() != f[1].len() {
        return Err(Error::shape("branch features differ in width"));
    }
    Ok(f[0]
        .iter()
        .map(|x| w[0] * x)
        .chain(f[1].iter().map(|x| w[1] * x))
        .collect())
}

/// A teacher model with its parameters and (for token input) vocabulary.
///
/// The auxiliary text classifiers share the parameter store under the
/// `aux.` prefix; they only matter during training.
#[derive(Clone, Debug)]
pub struct Teacher {
    pub model: FactGuard,
    pub aux: AuxClassifiers,
    pub params: ParamStore,
    pub vocab: Option<Vocabulary>,
}

impl Teacher {
    pub fn new(config: ModelConfig, vocab: Option<Vocabulary>, seed: u64) -> Result<Self> {
        if let (Some(ec), Some(v)) = (&config.encoder, &vocab) {
            if ec.vocab_size != v.len() {
                return Err(Error::config(format!(
                    "encoder vocab_size {} but vocabulary has {} tokens",
                    ec.vocab_size,
                    v.len()
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let model = FactGuard::new(&mut params, config, &mut rng)?;
        let c = &model.config;
        let aux = AuxClassifiers::new(&mut params, c.variant, c.d, c.activation, &mut rng)?;
        Ok(Self {
            model,
            aux,
            params,
            vocab,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.model.config
    }

    pub fn forward(&self, ex: &Example) -> Result<FusionTrace> {
        let mut tape = Tape::new();
        let vars = self.model.forward(&mut tape, &self.params, ex)?;
        Ok(FactGuard::trace(&tape, &vars))
    }

    pub fn predict(&self, ex: &Example) -> Result<f64> {
        Ok(self.forward(ex)?.y_hat)
    }

    /// `(f_C→R, f_R→C)` of one branch (1-based) on explicit encodings.
    pub fn interact(&self, branch: usize, c: &Matrix, r: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let b = self.branch(branch)?;
        let r_to_c = b
            .r_to_c
            .as_ref()
            .ok_or_else(|| Error::config("this variant has no cross-attention interactor"))?;
        if c.cols() != r.cols() {
            return Err(Error::shape("C and R differ in width"));
        }
        let mut tape = Tape::new();
        let (cv, rv) = (tape.leaf(c.clone()), tape.leaf(r.clone()));
        let cr = b.c_to_r.forward(&mut tape, &self.params, cv, rv, rv)?;
        let fc = tape.mean_rows(cr)?;
        let rc = r_to_c.forward(&mut tape, &self.params, rv, cv, cv)?;
        let fr = tape.mean_rows(rc)?;
        Ok((
            tape.value(fc).as_slice().to_vec(),
            tape.value(fr).as_slice().to_vec(),
        ))
    }

    /// `(w, ŵ)` of one branch (1-based) for a given `f_R→C`.
    pub fn usability_weight(&self, branch: usize, f_r_to_c: &[f64]) -> Result<(f64, f64)> {
        let b = self.branch(branch)?;
        let mut tape = Tape::new();
        let f = tape.leaf(Matrix::row_vector(f_r_to_c));
        let m = b.weight_mapper.forward(&mut tape, &self.params, f)?;
        let s = b.supervision.forward(&mut tape, &self.params, f)?;
        Ok((
            crate::autograd::sigmoid(tape.scalar(m)),
            crate::autograd::sigmoid(tape.scalar(s)),
        ))
    }

    /// `(Attn₁(N) + Attn₂(N)) / 2`.
    pub fn news_features(&self, n: &Matrix) -> Result<Vec<f64>> {
        if self.model.news_attention.len() != 2 {
            return Err(Error::config("this variant has no dual news attention"));
        }
        let mut tape = Tape::new();
        let nv = tape.leaf(n.clone());
        let a1 = self.model.news_attention[0].forward(&mut tape, &self.params, nv)?;
        let a2 = self.model.news_attention[1].forward(&mut tape, &self.params, nv)?;
        let s = tape.add(a1, a2)?;
        let f = tape.scale(s, 0.5);
        Ok(tape.value(f).as_slice().to_vec())
    }

    fn branch(&self, branch: usize) -> Result<&Branch> {
        branch
            .checked_sub(1)
            .and_then(|i| self.model.branches.get(i))
            .ok_or_else(|| Error::arg(format!("no interactor branch {branch}")))
    }

    /// Tokenizes raw texts with the teacher's vocabulary.
    pub fn tokens(&self, text: &str) -> Result<StreamInput> {
        let vocab = self
            .vocab
            .as_ref()
            .ok_or_else(|| Error::config("model was trained on precomputed encodings, not text"))?;
        let max_len = self
            .model
            .config
            .encoder
            .as_ref()
            .map_or(usize::MAX, |e| e.max_len);
        Ok(StreamInput::Tokens(tokenize(text, vocab, max_len)?.ids))
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    use super::*;
    use crate::datapipe::record::LlmJudgment;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn example(rng: &mut ChaCha8Rng, d: usize, tn: usize, tc: usize, tr: usize) -> Example {
        Example {
            id: "x".into(),
            news: StreamInput::Encoded(random_matrix(rng, tn, d)),
            content: StreamInput::Encoded(random_matrix(rng, tc, d)),
            rationale: StreamInput::Encoded(random_matrix(rng, tr, d)),
            label: 1,
            judgment: LlmJudgment::Fake,
        }
    }

    fn teacher(d: usize, heads: usize, variant: Variant) -> Teacher {
        let cfg = ModelConfig {
            d,
            heads,
            variant,
            ..ModelConfig::default()
        };
        Teacher::new(cfg, None, 3759).unwrap()
    }

    fn set_identity(store: &mut ParamStore, attn: &MultiHeadAttention) {
        for l in [&attn.query, &attn.key, &attn.value, &attn.output] {
            store.set(l.weight, Matrix::identity(l.in_dim)).unwrap();
            store.get_mut(l.bias).as_mut_slice().fill(0.0);
        }
    }

    #[test]
    fn forward_shapes() {
        let t = teacher(32, 4, Variant::Full);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ex = example(&mut rng, 32, 16, 8, 12);
        let trace = t.forward(&ex).unwrap();
        assert_eq!(trace.f_llm.len(), 64);
        assert_eq!(trace.f_n.len(), 32);
        assert_eq!(trace.f_cls.len(), 96);
        assert_eq!(&trace.f_cls[..32], &trace.f_n[..]);
        assert_eq!(&trace.f_cls[32..], &trace.f_llm[..]);
        assert!(trace.y_hat > 0.0 && trace.y_hat < 1.0);
        assert!(trace.w.iter().chain(&trace.w_hat).all(|w| *w > 0.0 && *w < 1.0));
        assert_eq!(t.forward(&ex).unwrap(), trace);
    }

    #[test]
    fn singleton_identity_interaction_copies_values() {
        let mut t = teacher(4, 1, Variant::Full);
        let b = t.model.branches[0].clone();
        set_identity(&mut t.params, &b.c_to_r);
        set_identity(&mut t.params, b.r_to_c.as_ref().unwrap());
        let c = Matrix::row_vector(&[0.1, 0.2, -0.3, 0.4]);
        let r = Matrix::row_vector(&[1.0, -2.0, 0.5, 0.0]);
        let (fc, fr) = t.interact(1, &c, &r).unwrap();
        assert_eq!(fc, r.as_slice());
        assert_eq!(fr, c.as_slice());
    }

    #[test]
    fn interaction_shapes_and_duplicate_values() {
        let t = teacher(32, 4, Variant::Full);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (fc, fr) = t.interact(2, &random_matrix(&mut rng, 8, 32), &random_matrix(&mut rng, 12, 32)).unwrap();
        assert_eq!((fc.len(), fr.len()), (32, 32));

        // Identical C rows: R→C attention returns that row whatever the query.
        let mut t = teacher(4, 2, Variant::Full);
        let b = t.model.branches[0].clone();
        set_identity(&mut t.params, b.r_to_c.as_ref().unwrap());
        let row = [0.3, -0.7, 0.2, 0.9];
        let c = Matrix::from_rows(&[row.to_vec(), row.to_vec()]).unwrap();
        let r = random_matrix(&mut rng, 3, 4);
        let (_, fr) = t.interact(1, &c, &r).unwrap();
        for (a, b) in fr.iter().zip(row) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn usability_weight_examples() {
        let mut t = teacher(8, 2, Variant::Full);
        let f = vec![0.4; 8];
        let before = t.usability_weight(1, &f).unwrap();
        assert_eq!(t.usability_weight(1, &f).unwrap(), before);
        for id in t.model.branch_param_ids(&t.params, 1) {
            t.params.get_mut(id).as_mut_slice().fill(0.0);
        }
        assert_eq!(t.usability_weight(1, &f).unwrap(), (0.5, 0.5));
        let bias = t.model.branches[0].weight_mapper.last().bias;
        t.params.get_mut(bias).as_mut_slice()[0] = 20.0;
        assert!(t.usability_weight(1, &f).unwrap().0 > 0.999999);
    }

    #[test]
    fn usability_weight_is_monotone_in_mapper_bias() {
        let mut t = teacher(8, 2, Variant::Full);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bias = t.model.branches[1].weight_mapper.last().bias;
        let mut last = 0.0;
        for b in [-3.0, -1.0, 0.0, 0.5, 2.0] {
            t.params.get_mut(bias).as_mut_slice()[0] = b;
            let w = t.usability_weight(2, &f).unwrap().0;
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn fuse_llm_examples() {
        let f1 = [0.5, -1.0, 2.0];
        let f2 = [3.0, 0.25, -0.5];
        let out = fuse_llm([0.999999, 0.999999], [&f1, &f2]).unwrap();
        for (o, x) in out.iter().zip(f1.iter().chain(&f2)) {
            assert!((o - x).abs() < 1e-5);
        }
        let out = fuse_llm([1e-6, 1e-6], [&f1, &f2]).unwrap();
        let norm_in = crate::tensor::norm(&f1) + crate::tensor::norm(&f2);
        assert!(crate::tensor::norm(&out) < 1e-5 * norm_in);
        assert_eq!(fuse_llm([0.3, 0.6], [&[0.0; 32], &[0.0; 32]]).unwrap().len(), 64);
    }

    #[test]
    fn news_features_examples() {
        let mut t = teacher(4, 2, Variant::Full);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = random_matrix(&mut rng, 5, 4);
        let [a1, a2] = [&t.model.news_attention[0], &t.model.news_attention[1]].map(|a| a.scorer.clone());
        let w1 = t.params.get(a1.weight).clone();
        let b1 = t.params.get(a1.bias).clone();
        t.params.set(a2.weight, w1).unwrap();
        t.params.set(a2.bias, b1).unwrap();
        let single = crate::nn::linear_token_attention(&n, &a1.params(&t.params)).unwrap();
        for (a, b) in t.news_features(&n).unwrap().iter().zip(&single) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        for a in [&a1, &a2] {
            t.params.get_mut(a.weight).as_mut_slice().fill(0.0);
            t.params.get_mut(a.bias).as_mut_slice().fill(0.0);
        }
        let mean = crate::nn::avg_pool(&n).unwrap();
        for (a, b) in t.news_features(&n).unwrap().iter().zip(&mean) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        let t = teacher(4, 2, Variant::Full);
        let one = Matrix::row_vector(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(t.news_features(&one).unwrap(), one.as_slice());
    }

    #[test]
    fn saturated_classifier() {
        let mut t = teacher(8, 2, Variant::Full);
        let last = t.model.classifier.last().clone();
        t.params.get_mut(last.weight).as_mut_slice().fill(0.0);
        t.params.get_mut(last.bias).as_mut_slice()[0] = 20.0;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(t.predict(&example(&mut rng, 8, 3, 2, 4)).unwrap() > 0.999999);
    }

    #[test]
    fn branch_independence() {
        let t = teacher(8, 2, Variant::Full);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ex = example(&mut rng, 8, 4, 3, 5);
        let base = t.forward(&ex).unwrap();
        let mut perturbed = t.clone();
        for id in t.model.branch_param_ids(&t.params, 1) {
            for v in perturbed.params.get_mut(id).as_mut_slice() {
                *v += rng.gen_range(-0.5..0.5);
            }
        }
        let after = perturbed.forward(&ex).unwrap();
        assert_ne!(after.f_c_to_r[0], base.f_c_to_r[0]);
        assert_eq!(after.f_c_to_r[1], base.f_c_to_r[1]);
        assert_eq!(after.f_r_to_c[1], base.f_r_to_c[1]);
        assert_eq!(after.w[1], base.w[1]);
    }

    #[test]
    fn classifier_rejects_wrong_width() {
        let t = teacher(8, 2, Variant::Full);
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::zeros(1, 16));
        assert!(matches!(t.model.classifier.forward(&mut tape, &t.params, x), Err(Error::Shape(_))));
    }

    #[test]
    fn variant_widths_hold_at_build() {
        for v in Variant::ALL {
            let t = teacher(8, 2, v);
            assert_eq!(t.model.feature_width(), v.classifier_width() * 8, "{v:?}");
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let trace = t.forward(&example(&mut rng, 8, 3, 4, 5)).unwrap();
            assert_eq!(trace.f_cls.len(), t.model.feature_width());
        }
    }

    #[test]
    fn wo_llm_usability_differs_only_in_usability_path() {
        let full = teacher(8, 2, Variant::Full);
        let wo = teacher(8, 2, Variant::WoLlmUsability);
        assert_eq!(full.params, wo.params);
        assert_eq!(full.params.fingerprint_all(), wo.params.fingerprint_all());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ex = example(&mut rng, 8, 3, 4, 5);
        let (a, b) = (full.forward(&ex).unwrap(), wo.forward(&ex).unwrap());
        assert_eq!(a.f_c_to_r, b.f_c_to_r);
        assert_eq!(a.f_r_to_c, b.f_r_to_c);
        assert_eq!(a.f_n, b.f_n);
        assert_eq!(a.w_hat, b.w_hat);
        assert_eq!(b.w, vec![1.0, 1.0]);
        assert_ne!(a.w, b.w);
    }

    #[test]
    fn precomputed_width_is_checked() {
        let t = teacher(8, 2, Variant::Full);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut ex = example(&mut rng, 8, 3, 4, 5);
        ex.rationale = StreamInput::Encoded(Matrix::zeros(2, 6));
        assert!(matches!(t.forward(&ex), Err(Error::Shape(_))));
        ex.rationale = StreamInput::Tokens(vec![2, 3]);
        assert!(t.forward(&ex).unwrap_err().is_config());
    }
}
