//! Latent symbolic structures, stimulus renderings and the combinatorial
//! supporting/querying split.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of attempts before a split is declared infeasible.
pub const SPLIT_RETRY_BUDGET: usize = 1_000;

/// Largest number of items a registry category may hold.
pub const MAX_CATEGORY_ITEMS: usize = 10;

const BUNDLED_REGISTRY: &str = include_str!("../data/categories.json");

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("registry has {available} categories, cannot sample {requested} dimensions")]
    RegistryTooSmall { requested: usize, available: usize },
    #[error("invalid value range [{v_min}, {v_max}] (need 2 <= v_min <= v_max)")]
    InvalidValueRange { v_min: usize, v_max: usize },
    #[error("category `{category}` has {available} items, fewer than v_max = {v_max}")]
    CategoryTooSmall {
        category: String,
        available: usize,
        v_max: usize,
    },
    #[error("malformed registry: {0}")]
    MalformedRegistry(String),
    #[error("invalid latent structure: {0}")]
    InvalidStructure(String),
    #[error("value index {index} out of range for dimension {dim} (d = {size})")]
    IndexOutOfRange { dim: usize, index: usize, size: usize },
    #[error("vector has {got} components, structure has {expected} dimensions")]
    LengthMismatch { expected: usize, got: usize },
    #[error("item `{item}` is not an active value of dimension {dim}")]
    UnknownItem { dim: usize, item: String },
    #[error("no feasible split: n_test = {n_test}, S = {s_shots} over {lattice} combinations ({attempts} attempts)")]
    InfeasibleSplit {
        n_test: usize,
        s_shots: usize,
        lattice: usize,
        attempts: usize,
    },
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Named concept classes, each holding an ordered list of item names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryRegistry {
    categories: IndexMap<String, Vec<String>>,
}

impl CategoryRegistry {
    pub fn new(categories: IndexMap<String, Vec<String>>) -> Result<Self, DomainError> {
        if categories.is_empty() {
            return Err(DomainError::MalformedRegistry("no categories".into()));
        }
        for (name, items) in &categories {
            if name.trim().is_empty() {
                return Err(DomainError::MalformedRegistry("empty category name".into()));
            }
            if items.is_empty() || items.len() > MAX_CATEGORY_ITEMS {
                return Err(DomainError::MalformedRegistry(format!(
                    "category `{name}` must hold 1..={MAX_CATEGORY_ITEMS} items, has {}",
                    items.len()
                )));
            }
            let unique: BTreeSet<&String> = items.iter().collect();
            if unique.len() != items.len() {
                return Err(DomainError::MalformedRegistry(format!(
                    "duplicate item in category `{name}`"
                )));
            }
        }
        Ok(Self { categories })
    }

    /// The ten-class registry shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_REGISTRY).expect("bundled registry is well-formed")
    }

    /// Parse a JSON object mapping category names to item lists.
    ///
    /// Duplicate category names are rejected rather than silently merged.
    pub fn from_json(text: &str) -> Result<Self, DomainError> {
        let pairs: Vec<(String, Vec<String>)> = serde_json::from_str::<DuplicateCheck>(text)
            .map_err(|e| DomainError::MalformedRegistry(e.to_string()))?
            .0;
        let mut categories = IndexMap::with_capacity(pairs.len());
        for (name, items) in pairs {
            if categories.insert(name.clone(), items).is_some() {
                return Err(DomainError::MalformedRegistry(format!(
                    "duplicate category `{name}`"
                )));
            }
        }
        Self::new(categories)
    }

    pub fn load(path: &Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path).map_err(|source| DomainError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn items(&self, category: &str) -> Option<&[String]> {
        self.categories.get(category).map(Vec::as_slice)
    }

    fn entry(&self, i: usize) -> (&String, &Vec<String>) {
        self.categories.get_index(i).expect("index in range")
    }
}

// Keeps every key/value pair of the JSON object in file order so duplicate
// keys can be reported.
struct DuplicateCheck(Vec<(String, Vec<String>)>);

impl<'de> Deserialize<'de> for DuplicateCheck {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl<'de> serde::de::Visitor<'de> for Visitor {
            type Value = DuplicateCheck;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of category name to item list")
            }
            fn visit_map<A: serde::de::MapAccess<'de>>(
                self,
                mut map: A,
            ) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = map.next_entry::<String, Vec<String>>()? {
                    out.push(entry);
                }
                Ok(DuplicateCheck(out))
            }
        }
        de.deserialize_map(Visitor)
    }
}

/// One latent dimension: a category and the episode's active values in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub category: String,
    pub values: Vec<String>,
}

impl DimensionSpec {
    pub fn d(&self) -> usize {
        self.values.len()
    }

    pub fn index_of(&self, item: &str) -> Option<usize> {
        self.values.iter().position(|v| v == item)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentStructure {
    pub dims: Vec<DimensionSpec>,
}

impl LatentStructure {
    pub fn new(dims: Vec<DimensionSpec>) -> Result<Self, DomainError> {
        if dims.is_empty() {
            return Err(DomainError::InvalidStructure("no dimensions".into()));
        }
        let mut seen = BTreeSet::new();
        for dim in &dims {
            if !seen.insert(dim.category.as_str()) {
                return Err(DomainError::InvalidStructure(format!(
                    "category `{}` used twice",
                    dim.category
                )));
            }
            if dim.values.is_empty() {
                return Err(DomainError::InvalidStructure(format!(
                    "dimension `{}` has no values",
                    dim.category
                )));
            }
            let unique: BTreeSet<&String> = dim.values.iter().collect();
            if unique.len() != dim.values.len() {
                return Err(DomainError::InvalidStructure(format!(
                    "dimension `{}` repeats a value",
                    dim.category
                )));
            }
        }
        Ok(Self { dims })
    }

    /// Synthetic structure with placeholder names, handy for lattice work.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self, DomainError> {
        let dims = sizes
            .iter()
            .enumerate()
            .map(|(i, &d)| DimensionSpec {
                category: format!("dim{i}"),
                values: (0..d).map(|v| format!("v{i}_{v}")).collect(),
            })
            .collect();
        Self::new(dims)
    }

    pub fn n_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.dims.iter().map(DimensionSpec::d).collect()
    }

    pub fn lattice_size(&self) -> usize {
        self.dims.iter().map(DimensionSpec::d).product()
    }

    pub fn max_d(&self) -> usize {
        self.dims.iter().map(DimensionSpec::d).max().unwrap_or(0)
    }

    pub fn validate(&self, v: &LatentVector) -> Result<(), DomainError> {
        if v.0.len() != self.n_dim() {
            return Err(DomainError::LengthMismatch {
                expected: self.n_dim(),
                got: v.0.len(),
            });
        }
        for (dim, (&index, spec)) in v.0.iter().zip(&self.dims).enumerate() {
            if index >= spec.d() {
                return Err(DomainError::IndexOutOfRange {
                    dim,
                    index,
                    size: spec.d(),
                });
            }
        }
        Ok(())
    }
}

/// Value indices, one per dimension.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentVector(pub Vec<usize>);

impl LatentVector {
    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for LatentVector {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoricalStimulus(pub Vec<String>);

impl CategoricalStimulus {
    pub fn items(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScsStimulus(pub Vec<f64>);

impl ScsStimulus {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Train/test partition of the combination lattice. Both lists are kept in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinatorialSplit {
    pub train: Vec<LatentVector>,
    pub test: Vec<LatentVector>,
}

impl CombinatorialSplit {
    pub fn is_test(&self, v: &LatentVector) -> bool {
        self.test.binary_search(v).is_ok()
    }
}

pub fn sample_latent_structure<R: Rng + ?Sized>(
    registry: &CategoryRegistry,
    n_dim: usize,
    v_min: usize,
    v_max: usize,
    rng: &mut R,
) -> Result<LatentStructure, DomainError> {
    if n_dim == 0 || n_dim > registry.len() {
        return Err(DomainError::RegistryTooSmall {
            requested: n_dim,
            available: registry.len(),
        });
    }
    if v_min < 2 || v_min > v_max {
        return Err(DomainError::InvalidValueRange { v_min, v_max });
    }
    let chosen = index::sample(rng, registry.len(), n_dim).into_vec();
    let mut dims = Vec::with_capacity(n_dim);
    for ci in chosen {
        let (name, items) = registry.entry(ci);
        if items.len() < v_max {
            return Err(DomainError::CategoryTooSmall {
                category: name.clone(),
                available: items.len(),
                v_max,
            });
        }
        let d = rng.random_range(v_min..=v_max);
        let values = index::sample(rng, items.len(), d)
            .into_iter()
            .map(|i| items[i].clone())
            .collect();
        dims.push(DimensionSpec {
            category: name.clone(),
            values,
        });
    }
    LatentStructure::new(dims)
}

/// All combinations of value indices, in lexicographic order.
pub fn enumerate_latent_vectors(structure: &LatentStructure) -> Vec<LatentVector> {
    let sizes = structure.sizes();
    let mut out = Vec::with_capacity(structure.lattice_size());
    let mut current = vec![0usize; sizes.len()];
    if sizes.contains(&0) {
        return out;
    }
    loop {
        out.push(LatentVector(current.clone()));
        // odometer increment, last position fastest
        let mut pos = sizes.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < sizes[pos] {
                break;
            }
            current[pos] = 0;
        }
    }
}

/// Per-(dimension, value) occurrence counts over a set of vectors.
pub fn coverage_counts<'a>(
    structure: &LatentStructure,
    vectors: impl IntoIterator<Item = &'a LatentVector>,
) -> Vec<Vec<usize>> {
    let mut counts: Vec<Vec<usize>> = structure.sizes().iter().map(|&d| vec![0; d]).collect();
    for v in vectors {
        for (dim, &value) in v.0.iter().enumerate() {
            counts[dim][value] += 1;
        }
    }
    counts
}

fn covers(counts: &[Vec<usize>], s_shots: usize) -> bool {
    counts.iter().flatten().all(|&c| c >= s_shots)
}

pub fn make_split<R: Rng + ?Sized>(
    structure: &LatentStructure,
    n_test: usize,
    s_shots: usize,
    rng: &mut R,
) -> Result<CombinatorialSplit, DomainError> {
    make_split_with_budget(structure, n_test, s_shots, SPLIT_RETRY_BUDGET, rng)
}

/// Rejection-samples `n_test` held-out vectors uniformly until the remaining
/// train set covers every (dimension, value) pair at least `s_shots` times.
pub fn make_split_with_budget<R: Rng + ?Sized>(
    structure: &LatentStructure,
    n_test: usize,
    s_shots: usize,
    budget: usize,
    rng: &mut R,
) -> Result<CombinatorialSplit, DomainError> {
    let lattice = enumerate_latent_vectors(structure);
    let infeasible = |attempts| DomainError::InfeasibleSplit {
        n_test,
        s_shots,
        lattice: lattice.len(),
        attempts,
    };
    if n_test == 0 || n_test >= lattice.len() {
        return Err(infeasible(0));
    }
    // every value of the widest dimension needs its own train vectors
    if lattice.len() - n_test < structure.max_d() * s_shots {
        return Err(infeasible(0));
    }
    let full = coverage_counts(structure, &lattice);
    for attempt in 1..=budget {
        let picked = index::sample(rng, lattice.len(), n_test);
        let mut counts = full.clone();
        for i in picked.iter() {
            for (dim, &value) in lattice[i].0.iter().enumerate() {
                counts[dim][value] -= 1;
            }
        }
        if covers(&counts, s_shots) {
            let held: BTreeSet<usize> = picked.into_iter().collect();
            let (test, train): (Vec<_>, Vec<_>) = lattice
                .into_iter()
                .enumerate()
                .partition(|(i, _)| held.contains(i));
            log::debug!("split found after {attempt} attempt(s)");
            return Ok(CombinatorialSplit {
                train: train.into_iter().map(|(_, v)| v).collect(),
                test: test.into_iter().map(|(_, v)| v).collect(),
            });
        }
    }
    Err(infeasible(budget))
}

pub fn render_categorical(
    structure: &LatentStructure,
    v: &LatentVector,
) -> Result<CategoricalStimulus, DomainError> {
    structure.validate(v)?;
    Ok(CategoricalStimulus(
        v.0.iter()
            .zip(&structure.dims)
            .map(|(&i, dim)| dim.values[i].clone())
            .collect(),
    ))
}

/// Inverse of [`render_categorical`].
pub fn index_of(
    structure: &LatentStructure,
    stimulus: &CategoricalStimulus,
) -> Result<LatentVector, DomainError> {
    if stimulus.len() != structure.n_dim() {
        return Err(DomainError::LengthMismatch {
            expected: structure.n_dim(),
            got: stimulus.len(),
        });
    }
    stimulus
        .0
        .iter()
        .zip(&structure.dims)
        .enumerate()
        .map(|(dim, (item, spec))| {
            spec.index_of(item).ok_or_else(|| DomainError::UnknownItem {
                dim,
                item: item.clone(),
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(LatentVector)
}

/// Center of section `value` when [-1, +1] is cut into `d` equal sections.
pub fn scs_section_center(d: usize, value: usize) -> f64 {
    let width = 2.0 / d as f64;
    -1.0 + width * (value as f64 + 0.5)
}

/// Standard deviation of the per-section Gaussian: one sixth of the width.
pub fn scs_section_sigma(d: usize) -> f64 {
    (2.0 / d as f64) / 6.0
}

/// Value index whose section center is nearest to `coord`.
pub fn scs_nearest_section(d: usize, coord: f64) -> usize {
    let width = 2.0 / d as f64;
    (((coord + 1.0) / width).floor().max(0.0) as usize).min(d - 1)
}

pub fn render_scs<R: Rng + ?Sized>(
    structure: &LatentStructure,
    v: &LatentVector,
    rng: &mut R,
) -> Result<ScsStimulus, DomainError> {
    structure.validate(v)?;
    let coords = v
        .0
        .iter()
        .zip(&structure.dims)
        .map(|(&l, dim)| {
            let d = dim.d();
            let normal = Normal::new(scs_section_center(d, l), scs_section_sigma(d))
                .expect("sigma is positive and finite");
            normal.sample(rng).clamp(-1.0, 1.0)
        })
        .collect();
    Ok(ScsStimulus(coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn lv(v: &[usize]) -> LatentVector {
        LatentVector(v.to_vec())
    }

    #[test]
    fn bundled_registry_has_the_ten_classes() {
        let reg = CategoryRegistry::bundled();
        let names: Vec<&str> = reg.names().collect();
        assert_eq!(
            names,
            [
                "vegetables",
                "fruits",
                "colors",
                "shapes",
                "animals",
                "countries",
                "metals",
                "planets",
                "sports",
                "instruments"
            ]
        );
        for name in reg.names() {
            assert_eq!(reg.items(name).unwrap().len(), 10, "{name}");
        }
        for item in ["piano", "oboe", "drums", "guitar"] {
            assert!(reg.items("instruments").unwrap().iter().any(|x| x == item));
        }
        for item in ["swimming", "golf", "rugby", "skiing"] {
            assert!(reg.items("sports").unwrap().iter().any(|x| x == item));
        }
        for item in ["eggplant", "pepper", "broccoli", "carrot"] {
            assert!(reg.items("vegetables").unwrap().iter().any(|x| x == item));
        }
    }

    #[test]
    fn registry_rejects_duplicates() {
        assert!(CategoryRegistry::from_json(r#"{"a": ["x", "x"]}"#).is_err());
        assert!(CategoryRegistry::from_json(r#"{"a": ["x"], "a": ["y"]}"#).is_err());
        assert!(CategoryRegistry::from_json(r#"{"a": []}"#).is_err());
        assert!(CategoryRegistry::from_json(r#"["a"]"#).is_err());
    }

    #[test]
    fn sampled_structure_respects_bounds() {
        let reg = CategoryRegistry::bundled();
        let s = sample_latent_structure(&reg, 3, 3, 5, &mut stream(7, "t")).unwrap();
        assert_eq!(s.n_dim(), 3);
        let cats: BTreeSet<&str> = s.dims.iter().map(|d| d.category.as_str()).collect();
        assert_eq!(cats.len(), 3);
        for dim in &s.dims {
            assert!((3..=5).contains(&dim.d()));
            let items = reg.items(&dim.category).unwrap();
            assert!(dim.values.iter().all(|v| items.contains(v)));
        }
        let again = sample_latent_structure(&reg, 3, 3, 5, &mut stream(7, "t")).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn sampling_errors() {
        let reg = CategoryRegistry::bundled();
        let mut rng = stream(0, "t");
        assert!(matches!(
            sample_latent_structure(&reg, 11, 3, 5, &mut rng),
            Err(DomainError::RegistryTooSmall { .. })
        ));
        assert!(matches!(
            sample_latent_structure(&reg, 3, 6, 5, &mut rng),
            Err(DomainError::InvalidValueRange { .. })
        ));
        assert!(matches!(
            sample_latent_structure(&reg, 3, 3, 11, &mut rng),
            Err(DomainError::CategoryTooSmall { .. })
        ));
    }

    #[test]
    fn appendix_categories_are_a_legal_outcome() {
        let reg = CategoryRegistry::bundled();
        let wanted: BTreeSet<&str> = ["instruments", "sports", "vegetables"].into();
        let hit = (0..5_000u64).any(|seed| {
            let s = sample_latent_structure(&reg, 3, 3, 5, &mut stream(seed, "t")).unwrap();
            s.dims.iter().map(|d| d.category.as_str()).collect::<BTreeSet<_>>() == wanted
        });
        assert!(hit);
    }

    #[test]
    fn lattice_enumeration() {
        let s = LatentStructure::from_sizes(&[2, 2]).unwrap();
        assert_eq!(
            enumerate_latent_vectors(&s),
            vec![lv(&[0, 0]), lv(&[0, 1]), lv(&[1, 0]), lv(&[1, 1])]
        );
        let s = LatentStructure::from_sizes(&[3, 5, 3]).unwrap();
        let all = enumerate_latent_vectors(&s);
        assert_eq!(all.len(), 45);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        let s = LatentStructure::from_sizes(&[1]).unwrap();
        assert_eq!(enumerate_latent_vectors(&s), vec![lv(&[0])]);
    }

    #[test]
    fn split_two_by_two() {
        let s = LatentStructure::from_sizes(&[2, 2]).unwrap();
        for seed in 0..20 {
            let split = make_split(&s, 1, 1, &mut stream(seed, "t")).unwrap();
            assert_eq!(split.test.len(), 1);
            assert_eq!(split.train.len(), 3);
            assert!(covers(&coverage_counts(&s, &split.train), 1));
        }
        assert!(matches!(
            make_split(&s, 3, 1, &mut stream(0, "t")),
            Err(DomainError::InfeasibleSplit { .. })
        ));
    }

    #[test]
    fn tight_split_holds_out_complementary_vectors() {
        // each value occurs 4 times in the 2x2x2 lattice; S=3 forces the two
        // held-out vectors to differ on every dimension
        let s = LatentStructure::from_sizes(&[2, 2, 2]).unwrap();
        for seed in 0..10 {
            let split = make_split(&s, 2, 3, &mut stream(seed, "t")).unwrap();
            let (a, b) = (&split.test[0], &split.test[1]);
            assert!(a.0.iter().zip(&b.0).all(|(x, y)| x != y));
        }
    }

    #[test]
    fn split_three_five_three() {
        let s = LatentStructure::from_sizes(&[3, 5, 3]).unwrap();
        let split = make_split(&s, 8, 1, &mut stream(3, "t")).unwrap();
        assert_eq!(split.train.len(), 37);
        assert_eq!(split.test.len(), 8);
        // brute-force coverage check over the lattice
        for (dim, &d) in s.sizes().iter().enumerate() {
            for value in 0..d {
                assert!(split.train.iter().any(|v| v.0[dim] == value));
            }
        }
        for v in &split.test {
            assert!(!split.train.contains(v));
        }
    }

    #[test]
    fn categorical_rendering() {
        let s = LatentStructure::new(vec![
            DimensionSpec {
                category: "vegetables".into(),
                values: vec!["pepper".into(), "carrot".into()],
            },
            DimensionSpec {
                category: "colors".into(),
                values: vec!["red".into(), "green".into(), "blue".into()],
            },
            DimensionSpec {
                category: "shapes".into(),
                values: vec!["circle".into(), "star".into()],
            },
        ])
        .unwrap();
        let stim = render_categorical(&s, &lv(&[1, 2, 0])).unwrap();
        assert_eq!(stim.items(), ["carrot", "blue", "circle"]);
        let first = render_categorical(&s, &lv(&[0, 0, 0])).unwrap();
        assert_eq!(first.items(), ["pepper", "red", "circle"]);
        assert!(matches!(
            render_categorical(&s, &lv(&[2, 0, 0])),
            Err(DomainError::IndexOutOfRange { dim: 0, .. })
        ));
    }

    #[test]
    fn categorical_round_trip_three_by_three() {
        let s = LatentStructure::from_sizes(&[3, 3]).unwrap();
        for v in enumerate_latent_vectors(&s) {
            let stim = render_categorical(&s, &v).unwrap();
            assert_eq!(index_of(&s, &stim).unwrap(), v);
        }
    }

    #[test]
    fn scs_section_geometry() {
        assert!((scs_section_center(2, 0) + 0.5).abs() < 1e-12);
        assert!((scs_section_center(4, 3) - 0.75).abs() < 1e-12);
        let s = LatentStructure::from_sizes(&[2]).unwrap();
        let mut rng = stream(1, "scs");
        for _ in 0..1000 {
            let x = render_scs(&s, &lv(&[0]), &mut rng).unwrap().0[0];
            assert!((-1.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn scs_shape_is_n_dim() {
        let s = LatentStructure::from_sizes(&[2, 5, 3, 4]).unwrap();
        let stim = render_scs(&s, &lv(&[1, 4, 0, 2]), &mut stream(2, "scs")).unwrap();
        assert_eq!(stim.coords().len(), 4);
    }

    #[test]
    fn scs_nearest_center_recovers_values() {
        // Monte-Carlo oracle: 10k samples at d=3, classify by nearest center
        let s = LatentStructure::from_sizes(&[3]).unwrap();
        let mut rng = stream(11, "scs");
        let mut hits = 0;
        for k in 0..10_000usize {
            let l = k % 3;
            let x = render_scs(&s, &lv(&[l]), &mut rng).unwrap().0[0];
            let nearest = (0..3)
                .min_by(|&a, &b| {
                    let da = (x - scs_section_center(3, a)).abs();
                    let db = (x - scs_section_center(3, b)).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            assert_eq!(nearest, scs_nearest_section(3, x));
            hits += usize::from(nearest == l);
        }
        assert!(hits >= 9_900, "recovered {hits}/10000");
    }
}
