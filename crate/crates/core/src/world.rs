//! Scene model and the preprocessor that turns a scene into the
//! `(W, H, L, C)` multi-hot grid consumed by the neural modules.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

pub const DEFAULT_OBJECT_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        Cell { x, y, z }
    }

    pub fn to_array(self) -> [usize; 3] {
        [self.x, self.y, self.z]
    }

    /// The cell displaced by `steps * direction`, if it stays inside `spec`.
    pub fn offset(self, direction: [i32; 3], steps: i64, spec: &GridSpec) -> Option<Cell> {
        let x = self.x as i64 + direction[0] as i64 * steps;
        let y = self.y as i64 + direction[1] as i64 * steps;
        let z = self.z as i64 + direction[2] as i64 * steps;
        let inside = |v: i64, n: usize| v >= 0 && v < n as i64;
        if inside(x, spec.width) && inside(y, spec.height) && inside(z, spec.layers) {
            Some(Cell::new(x as usize, y as usize, z as usize))
        } else {
            None
        }
    }
}

impl core::fmt::Display for Cell {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub layers: usize,
    /// Edge length of a cell in meters.
    pub cell_size: f64,
    /// World coordinate of the corner of cell (0,0,0).
    pub origin: [f64; 3],
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::new(10, 10, 3, 0.1).expect("valid default grid")
    }
}

impl GridSpec {
    pub fn new(width: usize, height: usize, layers: usize, cell_size: f64) -> Result<Self> {
        let spec = GridSpec {
            width,
            height,
            layers,
            cell_size,
            origin: [0.0; 3],
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Desk-scale grid: 6 x 6 x 2 cells of 10 cm.
    pub fn desk() -> Self {
        GridSpec::new(6, 6, 2, 0.1).expect("valid desk grid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.layers == 0 {
            return Err(Error::InvalidGrid("every axis needs at least one cell"));
        }
        if !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(Error::InvalidGrid("cell size must be positive"));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite"));
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.width, self.height, self.layers]
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height * self.layers
    }

    /// Flat index of a cell, x-major then y then z.
    pub fn cell_index(&self, cell: Cell) -> usize {
        (cell.x * self.height + cell.y) * self.layers + cell.z
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let z = index % self.layers;
        let y = (index / self.layers) % self.height;
        let x = index / (self.layers * self.height);
        Cell::new(x, y, z)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(move |i| self.cell_at(i))
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height && cell.z < self.layers
    }

    /// Grid cell whose extent contains `position`.
    pub fn cell_of(&self, position: [f64; 3]) -> Result<Cell> {
        let dims = self.dims();
        let mut idx = [0usize; 3];
        for axis in 0..3 {
            let rel = libm::floor((position[axis] - self.origin[axis]) / self.cell_size);
            if !rel.is_finite() || rel < 0.0 || rel >= dims[axis] as f64 {
                return Err(Error::OutOfBounds(position));
            }
            idx[axis] = rel as usize;
        }
        Ok(Cell::new(idx[0], idx[1], idx[2]))
    }

    pub fn cell_center(&self, cell: Cell) -> [f64; 3] {
        let c = cell.to_array();
        core::array::from_fn(|axis| self.origin[axis] + (c[axis] as f64 + 0.5) * self.cell_size)
    }
}

/// Free-function form of [`GridSpec::cell_of`].
pub fn cell_of(position: [f64; 3], spec: &GridSpec) -> Result<Cell> {
    spec.cell_of(position)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: String,
    pub class_noun: String,
    pub attributes: BTreeSet<String>,
    pub position: [f64; 3],
}

impl ObjectInstance {
    pub fn new<'a>(
        id: &str,
        class_noun: &str,
        attributes: impl IntoIterator<Item = &'a str>,
        position: [f64; 3],
    ) -> Self {
        ObjectInstance {
            id: id.to_string(),
            class_noun: class_noun.to_string(),
            attributes: attributes.into_iter().map(|a| a.to_string()).collect(),
            position,
        }
    }

    pub fn cell(&self, spec: &GridSpec) -> Result<Cell> {
        spec.cell_of(self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub grid_spec: GridSpec,
    pub objects: Vec<ObjectInstance>,
    #[serde(default)]
    pub held: Option<String>,
}

impl SceneState {
    pub fn new(
        grid_spec: GridSpec,
        objects: Vec<ObjectInstance>,
        held: Option<String>,
    ) -> Result<Self> {
        let scene = SceneState {
            grid_spec,
            objects,
            held,
        };
        scene.validate(DEFAULT_OBJECT_CAP)?;
        Ok(scene)
    }

    pub fn empty(grid_spec: GridSpec) -> Self {
        SceneState {
            grid_spec,
            objects: Vec::new(),
            held: None,
        }
    }

    pub fn validate(&self, object_cap: usize) -> Result<()> {
        self.grid_spec.validate()?;
        if self.objects.len() > object_cap {
            return Err(Error::InvalidScene(format!(
                "{} objects exceed the cap of {object_cap}",
                self.objects.len()
            )));
        }
        let mut ids = BTreeSet::new();
        let mut cells: BTreeMap<Cell, &str> = BTreeMap::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return Err(Error::InvalidScene(format!(
                    "duplicate object id `{}`",
                    o.id
                )));
            }
            let cell = o.cell(&self.grid_spec)?;
            if self.is_held(&o.id) {
                continue;
            }
            if let Some(other) = cells.insert(cell, &o.id) {
                return Err(Error::CellCollision(other.to_string(), o.id.clone()));
            }
        }
        if let Some(h) = &self.held {
            if !ids.contains(h.as_str()) {
                return Err(Error::InvalidScene(format!(
                    "held object `{h}` is not in the scene"
                )));
            }
        }
        Ok(())
    }

    pub fn is_held(&self, id: &str) -> bool {
        self.held.as_deref() == Some(id)
    }

    /// Objects that occupy the grid (everything except the held object).
    pub fn placed(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(move |o| !self.is_held(&o.id))
    }

    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Map of occupied cells to object ids.
    pub fn occupancy(&self) -> BTreeMap<Cell, &str> {
        self.placed()
            .filter_map(|o| o.cell(&self.grid_spec).ok().map(|c| (c, o.id.as_str())))
            .collect()
    }

    pub fn object_at(&self, cell: Cell) -> Option<&ObjectInstance> {
        self.placed().find(|o| o.cell(&self.grid_spec) == Ok(cell))
    }
}

/// First unoccupied cell reached by stepping from `from` along `direction`.
pub fn free_cell_along(
    spec: &GridSpec,
    occupied: impl Fn(Cell) -> bool,
    from: Cell,
    direction: [i32; 3],
) -> Result<Cell> {
    let mut steps = 1;
    while let Some(cell) = from.offset(direction, steps, spec) {
        if !occupied(cell) {
            return Ok(cell);
        }
        steps += 1;
    }
    Err(Error::NoFreePosition)
}

/// Dense `(W, H, L, C)` tensor, cell-major: value `(cell, c)` sits at
/// `cell_index * C + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTensor {
    dims: [usize; 4],
    values: Vec<f64>,
}

impl GridTensor {
    pub fn zeros(spec: &GridSpec, channels: usize) -> Self {
        GridTensor {
            dims: [spec.width, spec.height, spec.layers, channels],
            values: vec![0.0; spec.cell_count() * channels],
        }
    }

    pub fn from_values(dims: [usize; 4], values: Vec<f64>) -> Result<Self> {
        if dims.iter().product::<usize>() != values.len() {
            return Err(Error::DimMismatch("tensor values do not match dims"));
        }
        Ok(GridTensor { dims, values })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.dims[3]
    }

    pub fn cell_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Feature column of the cell at flat index `cell`.
    pub fn column(&self, cell: usize) -> &[f64] {
        let c = self.dims[3];
        &self.values[cell * c..(cell + 1) * c]
    }

    fn column_mut(&mut self, cell: usize) -> &mut [f64] {
        let c = self.dims[3];
        &mut self.values[cell * c..(cell + 1) * c]
    }

    pub fn get(&self, cell: Cell, channel: usize) -> f64 {
        let idx = (cell.x * self.dims[1] + cell.y) * self.dims[2] + cell.z;
        self.values[idx * self.dims[3] + channel]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Encodes every placed object as a multi-hot column at its cell: one at the
/// class noun (or its override) and one per attribute.
pub fn encode_scene(
    scene: &SceneState,
    vocab: &Vocabulary,
    label_override: Option<&BTreeMap<String, String>>,
) -> Result<GridTensor> {
    let spec = &scene.grid_spec;
    let mut grid = GridTensor::zeros(spec, vocab.feature_width());
    for object in scene.placed() {
        let noun = label_override
            .and_then(|m| m.get(&object.id))
            .unwrap_or(&object.class_noun);
        let noun_idx = vocab
            .noun_index(noun)
            .ok_or_else(|| Error::UnknownSymbol(noun.clone()))?;
        let cell = spec.cell_index(object.cell(spec)?);
        let column = grid.column_mut(cell);
        if column.iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidScene(format!(
                "object `{}` shares its cell with another object",
                object.id
            )));
        }
        column[noun_idx] = 1.0;
        for attr in &object.attributes {
            let a = vocab
                .adjective_index(attr)
                .ok_or_else(|| Error::UnknownSymbol(attr.clone()))?;
            column[a] = 1.0;
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> GridSpec {
        GridSpec::new(6, 6, 2, 0.1).unwrap()
    }

    #[test]
    fn cell_of_examples() {
        let s = spec();
        assert_eq!(s.cell_of([0.0, 0.0, 0.0]).unwrap(), Cell::new(0, 0, 0));
        assert_eq!(s.cell_of([0.25, 0.14, 0.01]).unwrap(), Cell::new(2, 1, 0));
        assert!(matches!(
            s.cell_of([0.65, 0.1, 0.0]),
            Err(Error::OutOfBounds(_))
        ));
        assert!(matches!(
            s.cell_of([-0.01, 0.1, 0.0]),
            Err(Error::OutOfBounds(_))
        ));
        assert!(matches!(
            s.cell_of([0.1, 0.1, 0.2]),
            Err(Error::OutOfBounds(_))
        ));
    }

    #[test]
    fn centers_round_trip() {
        let s = GridSpec::default();
        for c in s.cells() {
            assert_eq!(s.cell_of(s.cell_center(c)).unwrap(), c);
            assert_eq!(s.cell_at(s.cell_index(c)), c);
        }
    }

    #[test]
    fn invalid_grids() {
        assert!(GridSpec::new(0, 1, 1, 0.1).is_err());
        assert!(GridSpec::new(1, 1, 1, 0.0).is_err());
        assert!(GridSpec::new(1, 1, 1, f64::NAN).is_err());
    }

    #[test]
    fn encode_examples() {
        let v = Vocabulary::desk();
        let s = spec();
        let empty = encode_scene(&SceneState::empty(s.clone()), &v, None).unwrap();
        assert_eq!(empty.sum(), 0.0);
        assert_eq!(empty.dims(), [6, 6, 2, 18]);

        let apple = ObjectInstance::new("a", "apple", ["red"], s.cell_center(Cell::new(2, 1, 0)));
        let scene = SceneState::new(s.clone(), vec![apple], None).unwrap();
        let g = encode_scene(&scene, &v, None).unwrap();
        assert_eq!(g.sum(), 2.0);
        assert_eq!(
            g.get(Cell::new(2, 1, 0), v.noun_index("apple").unwrap()),
            1.0
        );
        assert_eq!(
            g.get(Cell::new(2, 1, 0), v.adjective_index("red").unwrap()),
            1.0
        );

        let over: BTreeMap<String, String> = [("a".to_string(), "pear".to_string())].into();
        let g = encode_scene(&scene, &v, Some(&over)).unwrap();
        assert_eq!(g.sum(), 2.0);
        assert_eq!(
            g.get(Cell::new(2, 1, 0), v.noun_index("pear").unwrap()),
            1.0
        );
        assert_eq!(
            g.get(Cell::new(2, 1, 0), v.noun_index("apple").unwrap()),
            0.0
        );
    }

    #[test]
    fn encode_rejects_unknown() {
        let v = Vocabulary::desk();
        let s = spec();
        let o = ObjectInstance::new("a", "blorp", [], s.cell_center(Cell::new(0, 0, 0)));
        let scene = SceneState::new(s.clone(), vec![o], None).unwrap();
        assert_eq!(
            encode_scene(&scene, &v, None).unwrap_err(),
            Error::UnknownSymbol("blorp".into())
        );
        let o = ObjectInstance::new("a", "mug", ["sparkly"], s.cell_center(Cell::new(0, 0, 0)));
        let scene = SceneState::new(s, vec![o], None).unwrap();
        assert_eq!(
            encode_scene(&scene, &v, None).unwrap_err(),
            Error::UnknownSymbol("sparkly".into())
        );
    }

    #[test]
    fn held_object_is_not_encoded() {
        let v = Vocabulary::desk();
        let s = spec();
        let a = ObjectInstance::new("a", "ball", ["red"], s.cell_center(Cell::new(1, 1, 0)));
        let b = ObjectInstance::new("b", "ball", ["blue"], s.cell_center(Cell::new(1, 1, 0)));
        assert!(SceneState::new(s.clone(), vec![a.clone(), b.clone()], None).is_err());
        let scene = SceneState::new(s, vec![a, b], Some("a".into())).unwrap();
        let g = encode_scene(&scene, &v, None).unwrap();
        assert_eq!(g.sum(), 2.0);
        assert_eq!(
            g.get(Cell::new(1, 1, 0), v.adjective_index("blue").unwrap()),
            1.0
        );
    }

    #[test]
    fn object_cap() {
        let s = GridSpec::default();
        let objects: Vec<_> = (0..11)
            .map(|i| {
                ObjectInstance::new(
                    &format!("o{i}"),
                    "mug",
                    [],
                    s.cell_center(Cell::new(i % 10, i / 10, 0)),
                )
            })
            .collect();
        assert!(matches!(
            SceneState::new(s, objects, None),
            Err(Error::InvalidScene(_))
        ));
    }

    fn arb_scene() -> impl Strategy<Value = (SceneState, BTreeMap<String, String>)> {
        let v = Vocabulary::desk();
        let nouns = v.nouns().to_vec();
        let adjs = v.adjectives().to_vec();
        prop::collection::btree_map(
            0usize..72,
            (
                0usize..12,
                prop::collection::btree_set(0usize..6, 0..3),
                prop::option::of(0usize..12),
            ),
            0..10,
        )
        .prop_map(move |cells| {
            let s = spec();
            let mut objects = Vec::new();
            let mut over = BTreeMap::new();
            for (i, (cell, (noun, attrs, o))) in cells.into_iter().enumerate() {
                let id = format!("o{i}");
                objects.push(ObjectInstance::new(
                    &id,
                    &nouns[noun],
                    attrs.iter().map(|a| adjs[*a].as_str()),
                    s.cell_center(s.cell_at(cell)),
                ));
                if let Some(o) = o {
                    over.insert(id, nouns[o].clone());
                }
            }
            (SceneState::new(s, objects, None).unwrap(), over)
        })
    }

    proptest! {
        #[test]
        fn encoding_mass_and_override_equivalence((scene, over) in arb_scene()) {
            let v = Vocabulary::desk();
            let g = encode_scene(&scene, &v, Some(&over)).unwrap();
            let expected: usize = scene.objects.iter().map(|o| 1 + o.attributes.len()).sum();
            prop_assert_eq!(g.sum(), expected as f64);
            prop_assert!(g.values().iter().all(|&x| x == 0.0 || x == 1.0));

            let mut relabeled = scene.clone();
            for o in &mut relabeled.objects {
                if let Some(n) = over.get(&o.id) {
                    o.class_noun = n.clone();
                }
            }
            prop_assert_eq!(&g, &encode_scene(&relabeled, &v, None).unwrap());
            prop_assert_eq!(&g, &encode_scene(&scene, &v, Some(&over)).unwrap());
        }
    }
}
