//! Equal-weight empirical measures on the closed unit ball, synthetic
//! samplers, and exact optimal transport between empirical measures.

mod assignment;
mod sampling;
mod simplex;
mod transport;
mod witness;

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};

pub use assignment::solve_assignment;
pub use sampling::{sample_measure, DistributionSpec};
pub use simplex::solve_transportation;
pub use transport::{transport_plan, wasserstein, TransportPlan, MAX_EXPANDED, MAX_SUPPORT};
pub use witness::{kr_lower_bound, DistanceWitness, LinearWitness, ReluWitness, Witness};

/// Largest ambient dimension supported.
pub const MAX_DIM: usize = 16;

/// Slack on the unit-ball constraint for atoms.
pub const BALL_SLACK: f64 = 1e-12;

/// `(1/n) Σ δ_{x_i}` with every atom inside the closed unit ball.
///
/// Atoms are stored row-major in one flat buffer.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure<T> {
    dim: usize,
    atoms: Vec<T>,
    support: OnceLock<(Vec<(usize, usize)>, usize)>,
}

impl<T: PartialEq> PartialEq for EmpiricalMeasure<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.atoms == other.atoms
    }
}

impl<T: Scalar> EmpiricalMeasure<T> {
    pub fn new(dim: usize, atoms: Vec<T>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parameter(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if atoms.is_empty() || atoms.len() % dim != 0 {
            return Err(Error::Shape(format!(
                "{} coordinates do not form a nonempty list of {dim}-dimensional atoms",
                atoms.len()
            )));
        }
        let limit = T::one() + T::lit(BALL_SLACK);
        for (i, x) in atoms.chunks_exact(dim).enumerate() {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!("atom {i} is not finite")));
            }
            let r = norm2(x);
            if r > limit {
                return Err(Error::Parameter(format!(
                    "atom {i} has norm {r} outside the unit ball"
                )));
            }
        }
        Ok(Self::raw(dim, atoms))
    }

    fn raw(dim: usize, atoms: Vec<T>) -> Self {
        Self {
            dim,
            atoms,
            support: OnceLock::new(),
        }
    }

    pub fn from_points(points: &[Vec<T>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Shape("atoms have differing dimensions".into()));
        }
        Self::new(dim, points.concat())
    }

    pub fn dirac(point: &[T]) -> Result<Self> {
        Self::new(point.len(), point.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atom(&self, i: usize) -> &[T] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> std::slice::ChunksExact<'_, T> {
        self.atoms.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.atoms
    }

    pub fn weight(&self) -> T {
        T::one() / T::from_usize_lossy(self.len())
    }

    /// `∫ f dμ`.
    pub fn integrate<F: Fn(&[T]) -> T>(&self, f: F) -> T {
        self.atoms().map(f).sum::<T>() / T::from_usize_lossy(self.len())
    }

    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for x in self.atoms() {
            for (acc, &v) in m.iter_mut().zip(x) {
                *acc = *acc + v;
            }
        }
        let n = T::from_usize_lossy(self.len());
        m.iter_mut().for_each(|v| *v = *v / n);
        m
    }

    /// Canonical support: one representative index per distinct atom in
    /// lexicographic order, with multiplicities divided by their gcd, plus
    /// the reduced total. Identical for any reordering or uniform
    /// duplication of the atom list, so sums taken over it are too.
    /// Computed once and cached.
    pub fn support(&self) -> (&[(usize, usize)], usize) {
        let (groups, total) = self.support.get_or_init(|| self.compute_support());
        (groups, *total)
    }

    fn compute_support(&self) -> (Vec<(usize, usize)>, usize) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let cmp = |a: &usize, b: &usize| {
            self.atom(*a)
                .iter()
                .zip(self.atom(*b))
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        };
        idx.sort_by(cmp);
        let mut groups: Vec<(usize, usize)> = Vec::new();
        for i in idx {
            match groups.last_mut() {
                Some((rep, count)) if cmp(rep, &i).is_eq() => *count += 1,
                _ => groups.push((i, 1)),
            }
        }
        let g = groups.iter().fold(0, |g, &(_, c)| gcd(g, c));
        groups.iter_mut().for_each(|(_, c)| *c /= g);
        let total = groups.iter().map(|&(_, c)| c).sum();
        (groups, total)
    }

    /// Reorders atoms; `perm[k]` is the source index of the new k-th atom.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::Shape("permutation length mismatch".into()));
        }
        let mut seen = vec![false; perm.len()];
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Parameter("not a permutation".into()));
            }
            atoms.extend_from_slice(self.atom(p));
        }
        Ok(Self::raw(self.dim, atoms))
    }

    /// Every atom repeated `k` times; the measure itself is unchanged.
    pub fn repeated(&self, k: usize) -> Self {
        let mut atoms = Vec::with_capacity(self.atoms.len() * k);
        for x in self.atoms() {
            for _ in 0..k {
                atoms.extend_from_slice(x);
            }
        }
        Self::raw(self.dim, atoms)
    }

    pub fn cast<U: Scalar>(&self) -> EmpiricalMeasure<U> {
        EmpiricalMeasure::raw(self.dim, self.atoms.iter().map(|v| U::lit(v.as_f64())).collect())
    }

    /// CSV text: a `# n=<count> d=<dim>` line, an `x0..x{d-1}` header, one
    /// atom per row.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# n={} d={}", self.len(), self.dim);
        let header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for x in self.atoms() {
            let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let comment = lines
            .next()
            .ok_or_else(|| Error::Parse("empty measure file".into()))?;
        let (n, d) = parse_measure_comment(comment)?;
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))?;
        let expected: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        if header.split(',').map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let mut atoms = Vec::with_capacity(n * d);
        let mut rows = 0;
        for (lineno, line) in lines.enumerate() {
            let before = atoms.len();
            for field in line.split(',') {
                let v = field.trim().parse::<T>().map_err(|_| {
                    Error::Parse(format!("row {}: bad number {field:?}", lineno + 1))
                })?;
                atoms.push(v);
            }
            if atoms.len() - before != d {
                return Err(Error::Parse(format!(
                    "row {} has {} columns, expected {d}",
                    lineno + 1,
                    atoms.len() - before
                )));
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse(format!("declared n={n} but read {rows} rows")));
        }
        Self::new(d, atoms)
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn parse_measure_comment(line: &str) -> Result<(usize, usize)> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("expected '# n=.. d=..', got {line:?}")))?;
    let mut n = None;
    let mut d = None;
    for tok in body.split_whitespace() {
        if let Some(v) = tok.strip_prefix("n=") {
            n = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("d=") {
            d = v.parse().ok();
        }
    }
    match (n, d) {
        (Some(n), Some(d)) => Ok((n, d)),
        _ => Err(Error::Parse(format!("malformed measure comment {line:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_is_canonical() {
        let mu = EmpiricalMeasure::from_points(&[vec![0.5, 0.0], vec![-0.1, 0.2], vec![0.5, 0.0]]).unwrap();
        let (groups, total) = mu.support();
        assert_eq!(groups, &[(1, 1), (0, 2)]);
        assert_eq!(total, 3);

        let dup = mu.repeated(4).permuted(&[11, 3, 7, 0, 1, 2, 4, 5, 6, 8, 9, 10]).unwrap();
        let (g2, t2) = dup.support();
        assert_eq!(t2, 3);
        let reps: Vec<(&[f64], usize)> = g2.iter().map(|&(i, c)| (dup.atom(i), c)).collect();
        assert_eq!(reps, vec![(&[-0.1, 0.2][..], 1), (&[0.5, 0.0][..], 2)]);
    }

    #[test]
    fn rejects_atoms_outside_ball() {
        assert!(EmpiricalMeasure::new(2, vec![0.9f64, 0.9]).is_err());
        assert!(EmpiricalMeasure::new(2, vec![1.0f64, 1e-13]).is_ok());
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(EmpiricalMeasure::<f64>::new(2, vec![]).is_err());
        assert!(EmpiricalMeasure::new(2, vec![0.1f64, 0.2, 0.3]).is_err());
        assert!(EmpiricalMeasure::new(17, vec![0.0f64; 17]).is_err());
    }

    #[test]
    fn integrate_and_mean() {
        let mu = EmpiricalMeasure::from_points(&[vec![0.5f64, 0.0], vec![-0.5, 0.5]]).unwrap();
        assert_eq!(mu.mean(), vec![0.0, 0.25]);
        assert_eq!(mu.integrate(|x| x[0] * x[0]), 0.25);
        assert_eq!(mu.repeated(3).len(), 6);
        assert_eq!(mu.repeated(3).mean(), mu.mean());
    }

    #[test]
    fn permutation_must_be_bijective() {
        let mu = EmpiricalMeasure::from_points(&[vec![0.1f64], vec![0.2]]).unwrap();
        assert!(mu.permuted(&[0, 0]).is_err());
        assert_eq!(mu.permuted(&[1, 0]).unwrap().atom(0), &[0.2]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mu = EmpiricalMeasure::from_points(&[
            vec![0.1f64, -1.0 / 3.0],
            vec![std::f64::consts::FRAC_1_SQRT_2, 0.0],
        ])
        .unwrap();
        let text = mu.to_csv_string();
        assert!(text.starts_with("# n=2 d=2\nx0,x1\n"));
        assert_eq!(EmpiricalMeasure::<f64>::from_csv_str(&text).unwrap(), mu);
    }

    #[test]
    fn csv_count_mismatch_is_an_error() {
        let text = "# n=3 d=1\nx0\n0.1\n0.2\n";
        assert!(EmpiricalMeasure::<f64>::from_csv_str(text).is_err());
    }
}
