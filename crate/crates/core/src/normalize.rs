//! Raw relation vocabulary, its normalization into seven spatial types, and
//! the merging of objects declared equal (`Egal`).
//!
//! The mapping lives in `resources/normalization_v1.csv`, embedded at compile
//! time. Some rows depend on the target object: a branch for streets (tested
//! on the object kind), one for two-dimensional objects, and one for the rest.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Database, Dimensionality, ObjectKind, RelationRecord, SpatialObject};

pub const NORMALIZATION_TABLE_VERSION: u32 = 1;
pub const NORMALIZATION_TABLE_CSV: &str = include_str!("../resources/normalization_v1.csv");

macro_rules! raw_relations {
    ($($variant:ident => $text:literal),+ $(,)?) => {
        /// The closed vocabulary of relation types found in the registers.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum RawRelation {
            $($variant),+
        }

        impl RawRelation {
            pub const ALL: &'static [RawRelation] = &[$(RawRelation::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(RawRelation::$variant => $text),+
                }
            }
        }

        impl FromStr for RawRelation {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok(RawRelation::$variant),)+
                    other => Err(Error::UnknownRawType(other.to_string())),
                }
            }
        }
    };
}

raw_relations! {
    Iuxta => "Iuxta",
    Juxta => "Juxta",
    Prope => "Prope",
    Proxime => "Proxime",
    InAngulo => "In Angulo",
    InCantono => "In Cantono",
    InCompitoSiveCantono => "In Compito Sive Cantono",
    InIntroytu => "In Introytu",
    Extra => "Extra",
    In => "In",
    Intra => "Intra",
    AbOpposito => "Ab Opposito",
    ExOpposit => "Ex Opposit",
    InCapite => "In Capite",
    Super => "Super",
    Supra => "Supra",
    AOrient => "A Orient",
    AOccident => "A Occident",
    ACircio => "A Circio",
    AbAuraRecta => "Ab Aura Recta",
    AMeridie => "A Meridie",
    AUnaPart => "A Una Part",
    AbUnaPart => "Ab Una Part",
    ADuabusPart => "A Duabus Part",
    ATribusPart => "A Tribus Part",
    AParteRetro => "A Parte Retro",
    APartAnte => "A Part Ante",
    APartInferiori => "A Part Inferiori",
    AParteLateris => "A Parte Lateris",
    APartPosteriori => "A Part Posteriori",
    SiveAbUnaPart => "Sive Ab Una Part",
    Conjuncto => "Conjuncto",
    Contigu => "Contigu",
    Contiguo => "Contiguo",
    Retro => "Retro",
    Ante => "Ante",
    Egal => "Egal",
    Infra => "Infra",
    Subtus => "Subtus",
    Ad => "Ad",
    Apud => "Apud",
    Versus => "Versus",
}

impl fmt::Display for RawRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for RawRelation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RawRelation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NormalizedType {
    NorthOf,
    SouthOf,
    EastOf,
    WestOf,
    InsideOf,
    OutsideOf,
    /// Catch-all proximity type (near, facing, behind, ...).
    RelatedTo,
    /// Structural link between consecutive pieces of a split object.
    ArtificialAdjacency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierarchyClass {
    Hierarchical,
    Flat,
}

impl NormalizedType {
    pub const SEMANTIC: [NormalizedType; 7] = [
        NormalizedType::NorthOf,
        NormalizedType::SouthOf,
        NormalizedType::EastOf,
        NormalizedType::WestOf,
        NormalizedType::InsideOf,
        NormalizedType::OutsideOf,
        NormalizedType::RelatedTo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NormalizedType::NorthOf => "NorthOf",
            NormalizedType::SouthOf => "SouthOf",
            NormalizedType::EastOf => "EastOf",
            NormalizedType::WestOf => "WestOf",
            NormalizedType::InsideOf => "InsideOf",
            NormalizedType::OutsideOf => "OutsideOf",
            NormalizedType::RelatedTo => "RelatedTo",
            NormalizedType::ArtificialAdjacency => "ArtificialAdjacency",
        }
    }

    pub fn hierarchy_class(self) -> HierarchyClass {
        match self {
            NormalizedType::InsideOf | NormalizedType::OutsideOf => HierarchyClass::Hierarchical,
            _ => HierarchyClass::Flat,
        }
    }

    pub fn is_hierarchical(self) -> bool {
        self.hierarchy_class() == HierarchyClass::Hierarchical
    }
}

impl fmt::Display for NormalizedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizedType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NormalizedType::SEMANTIC
            .into_iter()
            .chain([NormalizedType::ArtificialAdjacency])
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| Error::GraphFormat(format!("unknown normalized type `{s}`")))
    }
}

/// Outcome of one branch of a mapping row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mapping {
    To(NormalizedType),
    Merge,
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "Merge" {
            Ok(Mapping::Merge)
        } else {
            s.parse().map(Mapping::To)
        }
    }
}

/// One row of the embedded normalization table.
#[derive(Debug, Clone)]
pub struct NormalizationRule {
    pub raw: RawRelation,
    pub translation: String,
    pub occurrences: u32,
    /// Branch taken when the target is a street; `None` means the row has no
    /// street-specific branch and the dimensionality decides.
    pub street: Option<Mapping>,
    pub surface: Mapping,
    pub other: Mapping,
}

impl NormalizationRule {
    pub fn resolve(&self, kind: ObjectKind, dim: Dimensionality) -> Mapping {
        match self.street {
            Some(m) if kind == ObjectKind::Street => m,
            _ if dim == Dimensionality::Surface => self.surface,
            _ => self.other,
        }
    }
}

#[derive(Deserialize)]
struct TableRow {
    raw_type: String,
    translation: String,
    occurrences: u32,
    street: String,
    surface: String,
    other: String,
}

fn parse_table(csv_text: &str) -> Result<Vec<NormalizationRule>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let mut rules = Vec::new();
    for row in reader.deserialize::<TableRow>() {
        let row = row?;
        rules.push(NormalizationRule {
            raw: row.raw_type.parse()?,
            translation: row.translation,
            occurrences: row.occurrences,
            street: match row.street.trim() {
                "" => None,
                s => Some(s.parse()?),
            },
            surface: row.surface.parse()?,
            other: row.other.parse()?,
        });
    }
    Ok(rules)
}

/// The embedded mapping, one rule per raw type, in table order.
pub fn normalization_table() -> &'static [NormalizationRule] {
    static TABLE: OnceLock<Vec<NormalizationRule>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rules = parse_table(NORMALIZATION_TABLE_CSV).expect("embedded normalization table");
        assert_eq!(rules.len(), RawRelation::ALL.len(), "one rule per raw type");
        rules
    })
}

fn rule_for(raw: RawRelation) -> &'static NormalizationRule {
    static INDEX: OnceLock<HashMap<RawRelation, usize>> = OnceLock::new();
    let index = INDEX.get_or_init(|| {
        normalization_table()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.raw, i))
            .collect()
    });
    &normalization_table()[index[&raw]]
}

/// Maps a raw relation onto its normalized type, given the object it points at.
pub fn normalize_relation_type(raw: RawRelation, target: &SpatialObject) -> Result<NormalizedType> {
    normalize_for(raw, target.kind, target.dim)
}

pub fn normalize_for(raw: RawRelation, kind: ObjectKind, dim: Dimensionality) -> Result<NormalizedType> {
    match rule_for(raw).resolve(kind, dim) {
        Mapping::To(t) => Ok(t),
        Mapping::Merge => Err(Error::UnmappableType(raw.as_str().to_string())),
    }
}

/// Unifies every group of objects linked by `Egal` into its lexicographically
/// smallest member, re-points the remaining relations, and drops the
/// duplicates and self-loops this creates.
pub fn merge_equal_objects(db: &Database) -> Result<Database> {
    let ids: Vec<&str> = db.objects().map(|o| o.id.as_str()).collect();
    let position: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let mut sets = DisjointSets::new(ids.len());
    for rel in db.relations().iter().filter(|r| r.raw_type == RawRelation::Egal) {
        let (a, b) = (position[rel.source_id.as_str()], position[rel.target_id.as_str()]);
        let (oa, ob) = (db.object(ids[a]).unwrap(), db.object(ids[b]).unwrap());
        if oa.kind != ob.kind {
            return Err(Error::ConflictingMerge {
                a: oa.id.clone(),
                kind_a: oa.kind.to_string(),
                b: ob.id.clone(),
                kind_b: ob.kind.to_string(),
            });
        }
        sets.union(a, b);
    }

    // ids are sorted, so the smallest index in a set is the smallest id
    let mut smallest: HashMap<usize, usize> = HashMap::new();
    for i in 0..ids.len() {
        smallest.entry(sets.find(i)).or_insert(i);
    }
    let canonical = |id: &str| -> &str {
        let root = sets.find_const(position[id]);
        ids[smallest[&root]]
    };

    let objects: BTreeMap<String, SpatialObject> = db
        .objects()
        .filter(|o| canonical(&o.id) == o.id)
        .map(|o| (o.id.clone(), o.clone()))
        .collect();

    let mut kept: Vec<RelationRecord> = Vec::new();
    let mut seen: HashMap<(String, String, RawRelation, crate::model::RelationOrigin, Option<String>), usize> =
        HashMap::new();
    for rel in db.relations().iter().filter(|r| r.raw_type != RawRelation::Egal) {
        let source = canonical(&rel.source_id).to_string();
        let target = canonical(&rel.target_id).to_string();
        if source == target {
            continue;
        }
        let mut rel = rel.clone();
        if target != rel.target_id {
            // segments belong to the absorbed object
            let target_obj = &objects[&target];
            if rel.target_segment.as_deref().is_some_and(|s| !target_obj.has_segment(s)) {
                rel.target_segment = None;
            }
        }
        rel.source_id = source;
        rel.target_id = target;
        let key = (
            rel.source_id.clone(),
            rel.target_id.clone(),
            rel.raw_type,
            rel.origin,
            rel.target_segment.clone(),
        );
        match seen.get(&key) {
            Some(&slot) => {
                if rel.id < kept[slot].id {
                    kept[slot] = rel;
                }
            }
            None => {
                seen.insert(key, kept.len());
                kept.push(rel);
            }
        }
    }

    Ok(Database::from_merged(objects, kept))
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn find_const(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
