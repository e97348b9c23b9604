//! JSON inclusion descriptions and matrix arguments.

use std::io::Read;
use std::path::Path;

use clap::ValueEnum;
use inclusion_teleport::linalg::{self, identity, kron};
use inclusion_teleport::pp_basis::{self, shift_matrix};
use inclusion_teleport::{qgraph, CMatrix64, FinDimAlgebra, Inclusion, PPBasis, TraceFunctional, C};
use serde::Deserialize;

use crate::CliError;

/// Complex matrix as row-major nested `[re, im]` pairs.
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionSpec {
    pub ambient_dim: usize,
    /// `(block_dim, multiplicity)` for each block of the small algebra.
    #[serde(rename = "N_blocks")]
    pub small_blocks: Vec<(usize, usize)>,
    pub embedding: Embedding,
    pub trace: TraceSpec,
    /// Blocks of the big algebra in block-diagonal position; the full matrix algebra if absent.
    #[serde(rename = "M_blocks", default)]
    pub big_blocks: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    BlockDiagonal,
    /// Generators of the small algebra as a unital *-algebra.
    Explicit(Vec<MatrixDoc>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TraceSpec {
    Named(String),
    /// Weight of one copy of each big block, in the order the blocks are listed.
    Weights(Vec<f64>),
}

pub fn read_source(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Input(format!("stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

pub fn parse_spec(text: &str) -> Result<InclusionSpec, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("inclusion spec: {e}")))
}

pub fn parse_matrix(doc: &MatrixDoc, n: usize, what: &str) -> Result<CMatrix64, CliError> {
    if doc.len() != n || doc.iter().any(|row| row.len() != n) {
        return Err(CliError::Input(format!("{what} must be a {n}×{n} matrix")));
    }
    Ok(CMatrix64::from_fn(n, n, |i, j| C::new(doc[i][j][0], doc[i][j][1])))
}

pub fn read_matrices(path: &Path, n: usize) -> Result<Vec<CMatrix64>, CliError> {
    let docs: Vec<MatrixDoc> = serde_json::from_str(&read_source(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    docs.iter()
        .enumerate()
        .map(|(k, d)| parse_matrix(d, n, &format!("matrix {k} of {}", path.display())))
        .collect()
}

fn invalid(e: inclusion_teleport::Error) -> CliError {
    CliError::Input(format!("invalid inclusion: {e}"))
}

fn sorted(mut shape: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    shape.sort_unstable();
    shape
}

impl InclusionSpec {
    pub fn build(&self, tol: f64) -> Result<Inclusion<f64>, CliError> {
        let n = self.ambient_dim;
        if n == 0 {
            return Err(CliError::Input("ambient_dim must be positive".into()));
        }
        let listed: usize = self.small_blocks.iter().map(|(d, m)| d * m).sum();
        if listed != n {
            return Err(CliError::Input(format!("N_blocks fill dimension {listed}, not ambient_dim {n}")));
        }
        let small = match &self.embedding {
            Embedding::BlockDiagonal => FinDimAlgebra::block_diagonal(&self.small_blocks).map_err(invalid)?,
            Embedding::Explicit(docs) => {
                let gens = docs
                    .iter()
                    .enumerate()
                    .map(|(k, d)| parse_matrix(d, n, &format!("generator {k}")))
                    .collect::<Result<Vec<_>, _>>()?;
                let alg = FinDimAlgebra::from_generators(&gens, n, tol).map_err(invalid)?;
                if sorted(alg.block_shape()) != sorted(self.small_blocks.clone()) {
                    return Err(CliError::Input(format!(
                        "generators span blocks {:?}, but N_blocks lists {:?}",
                        sorted(alg.block_shape()),
                        sorted(self.small_blocks.clone())
                    )));
                }
                alg
            }
        };
        let big_shape = self.big_blocks.clone().unwrap_or_else(|| vec![(n, 1)]);
        let big_dim: usize = big_shape.iter().map(|(d, m)| d * m).sum();
        if big_dim != n {
            return Err(CliError::Input(format!("M_blocks fill dimension {big_dim}, not ambient_dim {n}")));
        }
        let big = FinDimAlgebra::block_diagonal(&big_shape).map_err(invalid)?;
        match &self.trace {
            TraceSpec::Named(name) if name == "markov" => Inclusion::with_markov_trace(small, big, tol).map_err(invalid),
            TraceSpec::Named(name) => Err(CliError::Input(format!("unknown trace \"{name}\" (expected \"markov\" or a weight list)"))),
            TraceSpec::Weights(listed) => {
                let weights = reorder_weights(&big, &big_shape, listed)?;
                let trace = TraceFunctional::new(&big, &weights).map_err(invalid)?;
                Inclusion::new(small, big, trace, tol).map_err(invalid)
            }
        }
    }
}

/// Weights given per listed block, rearranged into the algebra's internal block order.
fn reorder_weights(big: &FinDimAlgebra<f64>, shape: &[(usize, usize)], listed: &[f64]) -> Result<Vec<f64>, CliError> {
    if listed.len() != shape.len() {
        return Err(CliError::Input(format!("{} trace weights for {} blocks", listed.len(), shape.len())));
    }
    let mut offsets = Vec::with_capacity(shape.len());
    let mut offset = 0;
    for &(d, m) in shape {
        offsets.push(offset);
        offset += d * m;
    }
    big.blocks()
        .iter()
        .map(|b| {
            offsets
                .iter()
                .position(|&o| b.central_projection()[(o, o)].re > 0.5)
                .map(|k| listed[k])
                .ok_or_else(|| CliError::Input("could not match trace weights to blocks".into()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Clock-and-shift unitaries of `M_n` over the scalars.
    Weyl,
    /// Powers of the cyclic shift, for the diagonal subalgebra.
    Shifts,
    /// Rank-one character projections, for the diagonal subalgebra.
    Characters,
    /// Block-cyclic shifts for equal blocks without multiplicity.
    Homogeneous,
    /// Whatever normaliser basis the block structure admits.
    Normaliser,
}

fn power(u: &CMatrix64, k: usize) -> CMatrix64 {
    (0..k).fold(identity(u.nrows()), |acc, _| acc * u)
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Weyl => "weyl",
            Family::Shifts => "shifts",
            Family::Characters => "characters",
            Family::Homogeneous => "homogeneous",
            Family::Normaliser => "normaliser",
        }
    }

    /// Elements of the family sized for `inc`; the pairing with `inc` is checked by verification.
    pub fn elements(self, inc: &Inclusion<f64>, tol: f64) -> Result<Vec<CMatrix64>, CliError> {
        let n = inc.ambient_dim();
        Ok(match self {
            Family::Weyl => pp_basis::weyl_unitaries(n),
            Family::Shifts => {
                let u = shift_matrix(n);
                (0..n).map(|k| power(&u, k)).collect()
            }
            Family::Characters => PPBasis::<f64>::characters(n).map_err(invalid)?.elements().to_vec(),
            Family::Homogeneous => {
                let shape = inc.small().block_shape();
                let l = shape[0].0;
                if shape.iter().any(|&b| b != (l, 1)) {
                    return Err(CliError::Input("homogeneous family needs equal blocks of multiplicity one".into()));
                }
                let s = kron(&shift_matrix(shape.len()), &identity(l));
                // Generated in the block-diagonal layout; carried over to the actual blocks.
                let frame = block_frame(inc);
                (0..shape.len()).map(|j| &frame * power(&s, j) * frame.adjoint()).collect()
            }
            Family::Normaliser => qgraph::find_normaliser_basis(inc, tol)
                .ok_or_else(|| CliError::Input("no normaliser basis is known for this inclusion".into()))?
                .elements()
                .to_vec(),
        })
    }

    pub fn basis(self, inc: &Inclusion<f64>, tol: f64) -> Result<PPBasis<f64>, CliError> {
        PPBasis::new(inc.clone(), self.elements(inc, tol)?).map_err(invalid)
    }
}

/// Unitary taking the standard block-diagonal layout of `⊕ M_l` to the blocks of `inc.small()`.
fn block_frame(inc: &Inclusion<f64>) -> CMatrix64 {
    let n = inc.ambient_dim();
    let mut frame = CMatrix64::zeros(n, n);
    let mut col = 0;
    for b in inc.small().blocks() {
        for f in b.frames().iter() {
            frame.columns_mut(col, f.ncols()).copy_from(f);
            col += f.ncols();
        }
    }
    frame
}

/// `identity`, `shift`, or a path to a JSON matrix.
pub fn named_matrix(arg: &str, n: usize) -> Result<CMatrix64, CliError> {
    match arg {
        "identity" => Ok(identity(n)),
        "shift" => Ok(shift_matrix(n)),
        path => {
            let doc: MatrixDoc = serde_json::from_str(&read_source(Path::new(path))?)
                .map_err(|e| CliError::Input(format!("{path}: {e}")))?;
            parse_matrix(&doc, n, path)
        }
    }
}

/// Random element of the span of `basis`, seeded.
pub fn sample_element(basis: &[CMatrix64], seed: u64) -> CMatrix64 {
    let mut rng = linalg::seeded_rng(seed);
    let re = linalg::random_reals::<f64, _>(basis.len(), &mut rng);
    let im = linalg::random_reals::<f64, _>(basis.len(), &mut rng);
    let coeffs: Vec<C<f64>> = re.into_iter().zip(im).map(|(a, b)| C::new(a, b)).collect();
    linalg::combine(&coeffs, basis)
}
