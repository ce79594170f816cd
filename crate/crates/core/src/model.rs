//! Spatial objects, raw relations and the validated [`Database`] holding them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::RawRelation;

/// The nine object types found in the land registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectKind {
    Property,
    ParishOrSector,
    Borough,
    DefensiveSystem,
    Gate,
    Livery,
    GeologicalLandmark,
    Street,
    Edifice,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 9] = [
        ObjectKind::Property,
        ObjectKind::ParishOrSector,
        ObjectKind::Borough,
        ObjectKind::DefensiveSystem,
        ObjectKind::Gate,
        ObjectKind::Livery,
        ObjectKind::GeologicalLandmark,
        ObjectKind::Street,
        ObjectKind::Edifice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Property => "Property",
            ObjectKind::ParishOrSector => "ParishOrSector",
            ObjectKind::Borough => "Borough",
            ObjectKind::DefensiveSystem => "DefensiveSystem",
            ObjectKind::Gate => "Gate",
            ObjectKind::Livery => "Livery",
            ObjectKind::GeologicalLandmark => "GeologicalLandmark",
            ObjectKind::Street => "Street",
            ObjectKind::Edifice => "Edifice",
        }
    }

    /// Dimensionality forced by the kind, if any. Streets, landmarks and
    /// edifices vary per record.
    pub fn fixed_dimensionality(self) -> Option<Dimensionality> {
        match self {
            ObjectKind::ParishOrSector | ObjectKind::Borough | ObjectKind::Livery => {
                Some(Dimensionality::Surface)
            }
            ObjectKind::DefensiveSystem => Some(Dimensionality::Linear),
            ObjectKind::Gate | ObjectKind::Property => Some(Dimensionality::Punctual),
            ObjectKind::Street | ObjectKind::GeologicalLandmark | ObjectKind::Edifice => None,
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ObjectKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown object kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimensionality {
    Punctual,
    Linear,
    Surface,
}

impl Dimensionality {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimensionality::Punctual => "punctual",
            Dimensionality::Linear => "linear",
            Dimensionality::Surface => "surface",
        }
    }

    pub fn is_punctual(self) -> bool {
        self == Dimensionality::Punctual
    }
}

impl fmt::Display for Dimensionality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimensionality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "punctual" | "0" | "0d" => Ok(Dimensionality::Punctual),
            "linear" | "1" | "1d" => Ok(Dimensionality::Linear),
            "surface" | "2" | "2d" => Ok(Dimensionality::Surface),
            other => Err(format!("unknown dimensionality `{other}`")),
        }
    }
}

/// Planar position in meters (projected CRS).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialObject {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub kind: ObjectKind,
    pub dim: Dimensionality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coord: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parish: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inside_old_walls: Option<bool>,
    /// Declared by its tenant (as opposed to cited only as a confront).
    /// Meaningful for properties only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared: Option<bool>,
    /// Ordered pieces of a splittable object; empty when not splittable.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<Segment>,
}

impl SpatialObject {
    pub fn new(id: impl Into<String>, kind: ObjectKind, dim: Dimensionality) -> Self {
        SpatialObject {
            id: id.into(),
            name: String::new(),
            kind,
            dim,
            coord: None,
            length_m: None,
            parish: None,
            inside_old_walls: None,
            declared: None,
            segments: Vec::new(),
        }
    }

    pub fn with_coord(mut self, x: f64, y: f64) -> Self {
        self.coord = Some(Point::new(x, y));
        self
    }

    pub fn with_length(mut self, length_m: f64) -> Self {
        self.length_m = Some(length_m);
        self
    }

    pub fn with_segments<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.segments = ids
            .into_iter()
            .map(|id| Segment {
                id: id.into(),
                coord: None,
            })
            .collect();
        self
    }

    pub fn is_property(&self) -> bool {
        self.kind == ObjectKind::Property
    }

    pub fn is_street(&self) -> bool {
        self.kind == ObjectKind::Street
    }

    pub fn has_segment(&self, segment: &str) -> bool {
        self.segments.iter().any(|s| s.id == segment)
    }

    fn check(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidObject {
            id: self.id.clone(),
            reason,
        };
        if self.id.is_empty() {
            return Err(invalid("empty id".into()));
        }
        if let Some(expected) = self.kind.fixed_dimensionality() {
            if expected != self.dim {
                return Err(invalid(format!(
                    "{} objects are {}, got {}",
                    self.kind, expected, self.dim
                )));
            }
        }
        if let Some(len) = self.length_m {
            if !(len.is_finite() && len > 0.0) {
                return Err(invalid(format!("length_m must be > 0, got {len}")));
            }
        }
        let finite = |p: &Point| p.x.is_finite() && p.y.is_finite();
        if self.coord.as_ref().is_some_and(|p| !finite(p)) {
            return Err(invalid("non-finite coordinates".into()));
        }
        if !self.segments.is_empty() {
            if self.dim.is_punctual() {
                return Err(invalid("punctual objects cannot carry segments".into()));
            }
            if self.segments.len() < 2 {
                return Err(invalid("a split object needs at least 2 segments".into()));
            }
            let mut seen = HashSet::new();
            for seg in &self.segments {
                if !seen.insert(seg.id.as_str()) {
                    return Err(invalid(format!("duplicate segment `{}`", seg.id)));
                }
                if seg.coord.as_ref().is_some_and(|p| !finite(p)) {
                    return Err(invalid(format!("segment `{}` has non-finite coordinates", seg.id)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationOrigin {
    /// Stated in the land registers.
    Primary,
    /// Street/street or edifice/street adjacency from secondary sources.
    Additional,
}

impl RelationOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationOrigin::Primary => "primary",
            RelationOrigin::Additional => "additional",
        }
    }
}

impl FromStr for RelationOrigin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "primary" | "" => Ok(RelationOrigin::Primary),
            "additional" => Ok(RelationOrigin::Additional),
            other => Err(format!("unknown origin `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub id: String,
    pub source_id: String,
    pub target_id: String,
    pub raw_type: RawRelation,
    #[serde(default = "primary")]
    pub origin: RelationOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_segment: Option<String>,
}

fn primary() -> RelationOrigin {
    RelationOrigin::Primary
}

impl RelationRecord {
    pub fn new(
        id: impl Into<String>,
        source_id: impl Into<String>,
        target_id: impl Into<String>,
        raw_type: RawRelation,
    ) -> Self {
        RelationRecord {
            id: id.into(),
            source_id: source_id.into(),
            target_id: target_id.into(),
            raw_type,
            origin: RelationOrigin::Primary,
            target_segment: None,
        }
    }

    pub fn additional(mut self) -> Self {
        self.origin = RelationOrigin::Additional;
        self
    }

    pub fn on_segment(mut self, segment: impl Into<String>) -> Self {
        self.target_segment = Some(segment.into());
        self
    }

    pub fn is_primary(&self) -> bool {
        self.origin == RelationOrigin::Primary
    }
}

/// A validated, immutable collection of objects and relations.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    objects: BTreeMap<String, SpatialObject>,
    relations: Vec<RelationRecord>,
    property_baseline: usize,
}

impl Database {
    /// Validates every object and relation invariant and computes the
    /// property baseline.
    pub fn new(objects: Vec<SpatialObject>, relations: Vec<RelationRecord>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for obj in objects {
            obj.check()?;
            let id = obj.id.clone();
            if by_id.insert(id.clone(), obj).is_some() {
                return Err(Error::DuplicateId(id));
            }
        }

        let mut relation_ids = HashSet::new();
        for rel in &relations {
            if !relation_ids.insert(rel.id.as_str()) {
                return Err(Error::DuplicateId(rel.id.clone()));
            }
            check_relation(rel, &by_id)?;
        }

        let mut db = Database {
            objects: by_id,
            relations,
            property_baseline: 0,
        };
        db.property_baseline = if db.has_egal() {
            crate::normalize::merge_equal_objects(&db)?.property_baseline
        } else {
            db.count_connected_properties()
        };
        Ok(db)
    }

    /// Builds a database from parts already known to be valid and free of
    /// `Egal` relations.
    pub(crate) fn from_merged(
        objects: BTreeMap<String, SpatialObject>,
        relations: Vec<RelationRecord>,
    ) -> Self {
        let mut db = Database {
            objects,
            relations,
            property_baseline: 0,
        };
        db.property_baseline = db.count_connected_properties();
        db
    }

    pub fn objects(&self) -> impl ExactSizeIterator<Item = &SpatialObject> {
        self.objects.values()
    }

    pub fn object(&self, id: &str) -> Option<&SpatialObject> {
        self.objects.get(id)
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn relations(&self) -> &[RelationRecord] {
        &self.relations
    }

    /// Number of properties present in the unfiltered full graph, i.e.
    /// involved in at least one primary relation once `Egal` objects are
    /// merged. This is the 100 % coverage reference.
    pub fn property_baseline(&self) -> usize {
        self.property_baseline
    }

    pub fn has_egal(&self) -> bool {
        self.relations.iter().any(|r| r.raw_type == RawRelation::Egal)
    }

    pub fn street_count(&self) -> usize {
        self.objects.values().filter(|o| o.is_street()).count()
    }

    fn count_connected_properties(&self) -> usize {
        let mut connected: HashSet<&str> = HashSet::new();
        for rel in self.relations.iter().filter(|r| r.is_primary()) {
            connected.insert(&rel.source_id);
            connected.insert(&rel.target_id);
        }
        connected
            .into_iter()
            .filter(|id| self.objects.get(*id).is_some_and(|o| o.is_property()))
            .count()
    }
}

fn check_relation(rel: &RelationRecord, objects: &BTreeMap<String, SpatialObject>) -> Result<()> {
    let resolve = |id: &str| {
        objects.get(id).ok_or_else(|| Error::DanglingEndpoint {
            relation: rel.id.clone(),
            object: id.to_string(),
        })
    };
    let source = resolve(&rel.source_id)?;
    let target = resolve(&rel.target_id)?;
    if rel.source_id == rel.target_id {
        return Err(Error::InvalidRelation {
            id: rel.id.clone(),
            reason: "self-loop".into(),
        });
    }
    if let Some(seg) = &rel.target_segment {
        if !target.has_segment(seg) {
            return Err(Error::DanglingSegment {
                relation: rel.id.clone(),
                object: target.id.clone(),
                segment: seg.clone(),
            });
        }
    }
    if rel.origin == RelationOrigin::Additional {
        let allowed = |a: &SpatialObject, b: &SpatialObject| {
            a.is_street() && matches!(b.kind, ObjectKind::Street | ObjectKind::Edifice)
        };
        if !(allowed(source, target) || allowed(target, source)) {
            return Err(Error::InvalidRelation {
                id: rel.id.clone(),
                reason: format!(
                    "additional relations link street/street or edifice/street, got {}/{}",
                    source.kind, target.kind
                ),
            });
        }
    }
    Ok(())
}
