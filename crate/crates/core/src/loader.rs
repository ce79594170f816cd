//! Reading and writing databases as flat files.
//!
//! CSV layout:
//!
//! * objects: `id,name,kind,dim,x,y,length_m,parish,inside_old_walls,declared`
//! * segments (optional companion): `object_id,segment_id,order,x,y`
//! * relations: `id,source_id,target_id,raw_type,origin,target_segment`
//!
//! Empty fields stand for absent values. A file ending in `.json` is read as a
//! JSON array of records with the same field names instead; JSON objects may
//! carry their `segments` inline.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Database, Dimensionality, ObjectKind, Point, RelationOrigin, RelationRecord, Segment, SpatialObject};
use crate::normalize::RawRelation;

pub const OBJECT_COLUMNS: [&str; 10] = [
    "id",
    "name",
    "kind",
    "dim",
    "x",
    "y",
    "length_m",
    "parish",
    "inside_old_walls",
    "declared",
];
pub const SEGMENT_COLUMNS: [&str; 5] = ["object_id", "segment_id", "order", "x", "y"];
pub const RELATION_COLUMNS: [&str; 6] = ["id", "source_id", "target_id", "raw_type", "origin", "target_segment"];

/// Loads and validates a database. `segments` is only consulted for CSV
/// object files (JSON objects carry their segments inline) but is accepted
/// with both.
pub fn load_database(objects: &Path, relations: &Path, segments: Option<&Path>) -> Result<Database> {
    let mut objs = if is_json(objects) {
        read_json::<SpatialObject>(objects)?
    } else {
        read_objects_csv(objects)?
    };
    if let Some(path) = segments {
        attach_segments(&mut objs, read_segments_csv(path)?, path)?;
    }
    let rels = if is_json(relations) {
        read_json::<RelationRecord>(relations)?
    } else {
        read_relations_csv(relations)?
    };
    Database::new(objs, rels)
}

/// Paths written by [`write_database`].
#[derive(Debug, Clone)]
pub struct DatabaseFiles {
    pub objects: PathBuf,
    pub relations: PathBuf,
    pub segments: Option<PathBuf>,
}

/// Writes `objects.csv`, `relations.csv` and, when any object is split,
/// `segments.csv` into `dir`.
pub fn write_database(db: &Database, dir: &Path) -> Result<DatabaseFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = DatabaseFiles {
        objects: dir.join("objects.csv"),
        relations: dir.join("relations.csv"),
        segments: db
            .objects()
            .any(|o| !o.segments.is_empty())
            .then(|| dir.join("segments.csv")),
    };

    let mut w = csv_writer(&files.objects)?;
    w.write_record(OBJECT_COLUMNS)?;
    for o in db.objects() {
        w.write_record([
            o.id.clone(),
            o.name.clone(),
            o.kind.to_string(),
            o.dim.to_string(),
            opt(o.coord.map(|p| p.x)),
            opt(o.coord.map(|p| p.y)),
            opt(o.length_m),
            o.parish.clone().unwrap_or_default(),
            opt(o.inside_old_walls),
            opt(o.declared),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&files.objects, e))?;

    if let Some(path) = &files.segments {
        let mut w = csv_writer(path)?;
        w.write_record(SEGMENT_COLUMNS)?;
        for o in db.objects() {
            for (order, s) in o.segments.iter().enumerate() {
                w.write_record([
                    o.id.clone(),
                    s.id.clone(),
                    order.to_string(),
                    opt(s.coord.map(|p| p.x)),
                    opt(s.coord.map(|p| p.y)),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }

    let mut w = csv_writer(&files.relations)?;
    w.write_record(RELATION_COLUMNS)?;
    for r in db.relations() {
        w.write_record([
            r.id.as_str(),
            &r.source_id,
            &r.target_id,
            r.raw_type.as_str(),
            r.origin.as_str(),
            r.target_segment.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&files.relations, e))?;
    Ok(files)
}

/// A non-fatal issue found in a loaded database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum Warning {
    /// Object with no incident relation at all.
    Isolate { object: String },
    /// Linear street without a length; top-k ranking will reject it.
    StreetWithoutLength { object: String },
    /// Relation pointing at a split object without naming the segment.
    UnassignedSegment { relation: String, object: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Isolate { object } => write!(f, "isolate: object `{object}` has no relation"),
            Warning::StreetWithoutLength { object } => {
                write!(f, "street without length: `{object}`")
            }
            Warning::UnassignedSegment { relation, object } => write!(
                f,
                "unassigned segment: relation `{relation}` targets split object `{object}` without target_segment"
            ),
        }
    }
}

pub fn validate_database(db: &Database) -> Vec<Warning> {
    let mut touched: HashSet<&str> = HashSet::new();
    for r in db.relations() {
        touched.insert(&r.source_id);
        touched.insert(&r.target_id);
    }
    let mut warnings = Vec::new();
    for o in db.objects() {
        if !touched.contains(o.id.as_str()) {
            warnings.push(Warning::Isolate { object: o.id.clone() });
        }
        if o.is_street() && o.dim == Dimensionality::Linear && o.length_m.is_none() {
            warnings.push(Warning::StreetWithoutLength { object: o.id.clone() });
        }
    }
    for r in db.relations() {
        if r.raw_type == RawRelation::Egal || r.target_segment.is_some() {
            continue;
        }
        if db.object(&r.target_id).is_some_and(|t| !t.segments.is_empty()) {
            warnings.push(Warning::UnassignedSegment {
                relation: r.id.clone(),
                object: r.target_id.clone(),
            });
        }
    }
    warnings
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Header-indexed access to the rows of one CSV file.
struct Table {
    path: String,
    columns: HashMap<String, usize>,
    reader: csv::Reader<File>,
}

struct Row<'a> {
    table: &'a Table,
    record: csv::StringRecord,
    line: u64,
}

impl Table {
    fn open(path: &Path, required: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().from_reader(file);
        let columns: HashMap<String, usize> = reader
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        let path_str = path.display().to_string();
        for col in required {
            if !columns.contains_key(*col) {
                return Err(Error::MalformedRecord {
                    path: path_str,
                    line: 1,
                    field: col.to_string(),
                    reason: "missing column".into(),
                });
            }
        }
        Ok(Table {
            path: path_str,
            columns,
            reader,
        })
    }

    fn rows(&mut self) -> Result<Vec<(csv::StringRecord, u64)>> {
        let mut out = Vec::new();
        for rec in self.reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            out.push((rec, line));
        }
        Ok(out)
    }
}

impl Row<'_> {
    fn raw(&self, field: &str) -> &str {
        self.table
            .columns
            .get(field)
            .and_then(|&i| self.record.get(i))
            .unwrap_or("")
    }

    fn text(&self, field: &str) -> Option<String> {
        let v = self.raw(field).trim();
        (!v.is_empty()).then(|| v.to_string())
    }

    fn malformed(&self, field: &str, reason: impl Into<String>) -> Error {
        Error::MalformedRecord {
            path: self.table.path.clone(),
            line: self.line,
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    fn required(&self, field: &str) -> Result<String> {
        self.text(field).ok_or_else(|| self.malformed(field, "empty value"))
    }

    fn parse<T: FromStr>(&self, field: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.text(field) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| self.malformed(field, format!("`{v}`: {e}"))),
        }
    }

    fn float(&self, field: &str) -> Result<Option<f64>> {
        let v = self.parse::<f64>(field)?;
        match v {
            Some(x) if !x.is_finite() => Err(self.malformed(field, "not a finite number")),
            _ => Ok(v),
        }
    }

    fn flag(&self, field: &str) -> Result<Option<bool>> {
        match self.text(field) {
            None => Ok(None),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" => Ok(Some(true)),
                "false" | "0" | "no" => Ok(Some(false)),
                _ => Err(self.malformed(field, format!("`{v}` is not a boolean"))),
            },
        }
    }

    fn point(&self) -> Result<Option<Point>> {
        match (self.float("x")?, self.float("y")?) {
            (Some(x), Some(y)) => Ok(Some(Point::new(x, y))),
            (None, None) => Ok(None),
            _ => Err(self.malformed("x", "x and y must be given together")),
        }
    }
}

fn for_each_row<F>(path: &Path, required: &[&str], mut f: F) -> Result<()>
where
    F: FnMut(&Row<'_>) -> Result<()>,
{
    let mut table = Table::open(path, required)?;
    for (record, line) in table.rows()? {
        f(&Row {
            table: &table,
            record,
            line,
        })?;
    }
    Ok(())
}

fn read_objects_csv(path: &Path) -> Result<Vec<SpatialObject>> {
    let mut out = Vec::new();
    for_each_row(path, &["id", "kind", "dim"], |row| {
        let kind: ObjectKind = row.parse("kind")?.ok_or_else(|| row.malformed("kind", "empty value"))?;
        let dim: Dimensionality = row.parse("dim")?.ok_or_else(|| row.malformed("dim", "empty value"))?;
        let mut obj = SpatialObject::new(row.required("id")?, kind, dim);
        obj.name = row.raw("name").to_string();
        obj.coord = row.point()?;
        obj.length_m = row.float("length_m")?;
        obj.parish = row.text("parish");
        obj.inside_old_walls = row.flag("inside_old_walls")?;
        obj.declared = row.flag("declared")?;
        out.push(obj);
        Ok(())
    })?;
    Ok(out)
}

struct SegmentRow {
    object_id: String,
    order: i64,
    line: u64,
    segment: Segment,
}

fn read_segments_csv(path: &Path) -> Result<Vec<SegmentRow>> {
    let mut out = Vec::new();
    for_each_row(path, &["object_id", "segment_id"], |row| {
        let order = row.parse::<i64>("order")?.unwrap_or(out.len() as i64);
        out.push(SegmentRow {
            object_id: row.required("object_id")?,
            order,
            line: row.line,
            segment: Segment {
                id: row.required("segment_id")?,
                coord: row.point()?,
            },
        });
        Ok(())
    })?;
    Ok(out)
}

fn attach_segments(objects: &mut [SpatialObject], rows: Vec<SegmentRow>, path: &Path) -> Result<()> {
    let index: HashMap<String, usize> = objects.iter().enumerate().map(|(i, o)| (o.id.clone(), i)).collect();
    let mut grouped: BTreeMap<usize, Vec<SegmentRow>> = BTreeMap::new();
    for row in rows {
        let Some(&i) = index.get(&row.object_id) else {
            return Err(Error::MalformedRecord {
                path: path.display().to_string(),
                line: row.line,
                field: "object_id".into(),
                reason: format!("unknown object `{}`", row.object_id),
            });
        };
        grouped.entry(i).or_default().push(row);
    }
    for (i, mut segs) in grouped {
        segs.sort_by_key(|s| s.order);
        objects[i].segments.extend(segs.into_iter().map(|s| s.segment));
    }
    Ok(())
}

fn read_relations_csv(path: &Path) -> Result<Vec<RelationRecord>> {
    let mut out = Vec::new();
    for_each_row(path, &["id", "source_id", "target_id", "raw_type"], |row| {
        let raw_type: RawRelation = row.raw("raw_type").parse()?;
        let origin: RelationOrigin = row.parse("origin")?.unwrap_or(RelationOrigin::Primary);
        out.push(RelationRecord {
            id: row.required("id")?,
            source_id: row.required("source_id")?,
            target_id: row.required("target_id")?,
            raw_type,
            origin,
            target_segment: row.text("target_segment"),
        });
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        path
    }

    const OBJECTS: &str = "id,name,kind,dim,x,y,length_m,parish,inside_old_walls,declared\n\
        P1,house,Property,punctual,0,0,,St Pierre,true,true\n\
        P2,,Property,punctual,3,4,,,,\n";

    #[test]
    fn minimal_csv() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(dir.path(), "objects.csv", OBJECTS);
        let r = write(dir.path(), "relations.csv", "id,source_id,target_id,raw_type,origin,target_segment\nR1,P1,P2,Juxta,,\n");
        let db = load_database(&o, &r, None).unwrap();
        assert_eq!(db.object_count(), 2);
        assert_eq!(db.relations().len(), 1);
        let p1 = db.object("P1").unwrap();
        assert_eq!(p1.parish.as_deref(), Some("St Pierre"));
        assert_eq!(p1.inside_old_walls, Some(true));
        assert_eq!(db.object("P2").unwrap().coord, Some(Point::new(3.0, 4.0)));
    }

    #[test]
    fn dangling_endpoint_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(dir.path(), "objects.csv", OBJECTS);
        let r = write(dir.path(), "relations.csv", "id,source_id,target_id,raw_type,origin,target_segment\nR1,P1,X99,Juxta,,\n");
        match load_database(&o, &r, None) {
            Err(Error::DanglingEndpoint { object, .. }) => assert_eq!(object, "X99"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_raw_type_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(dir.path(), "objects.csv", OBJECTS);
        let r = write(dir.path(), "relations.csv", "id,source_id,target_id,raw_type,origin,target_segment\nR1,P1,P2,Juxtaa,,\n");
        assert!(matches!(load_database(&o, &r, None), Err(Error::UnknownRawType(s)) if s == "Juxtaa"));
    }

    #[test]
    fn malformed_field_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(
            dir.path(),
            "objects.csv",
            "id,name,kind,dim,x,y,length_m,parish,inside_old_walls,declared\nP1,,Property,punctual,0,0,,,,\nP2,,Property,punctual,abc,0,,,,\n",
        );
        let r = write(dir.path(), "relations.csv", "id,source_id,target_id,raw_type,origin,target_segment\n");
        match load_database(&o, &r, None) {
            Err(Error::MalformedRecord { line, field, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "x");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn segments_are_ordered() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(
            dir.path(),
            "objects.csv",
            "id,name,kind,dim,x,y,length_m,parish,inside_old_walls,declared\nS1,rue,Street,linear,,,120.5,,,\nP1,,Property,punctual,,,,,,\n",
        );
        let s = write(dir.path(), "segments.csv", "object_id,segment_id,order,x,y\nS1,b,2,,\nS1,a,1,1,1\n");
        let r = write(dir.path(), "relations.csv", "id,source_id,target_id,raw_type,origin,target_segment\nR1,P1,S1,Juxta,primary,b\n");
        let db = load_database(&o, &r, Some(&s)).unwrap();
        let ids: Vec<&str> = db.object("S1").unwrap().segments.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
    }

    #[test]
    fn json_alternative() {
        let dir = tempfile::tempdir().unwrap();
        let o = write(
            dir.path(),
            "objects.json",
            r#"[{"id":"A","kind":"Property","dim":"punctual"},{"id":"B","kind":"Gate","dim":"punctual","coord":{"x":1.0,"y":2.0}}]"#,
        );
        let r = write(
            dir.path(),
            "relations.json",
            r#"[{"id":"R1","source_id":"A","target_id":"B","raw_type":"A Orient"}]"#,
        );
        let db = load_database(&o, &r, None).unwrap();
        assert_eq!(db.relations()[0].raw_type, RawRelation::AOrient);
        assert_eq!(db.relations()[0].origin, RelationOrigin::Primary);
    }

    #[test]
    fn warnings() {
        let street = SpatialObject::new("S", ObjectKind::Street, Dimensionality::Linear).with_segments(["s1", "s2"]);
        let db = Database::new(
            vec![
                SpatialObject::new("A", ObjectKind::Property, Dimensionality::Punctual),
                SpatialObject::new("B", ObjectKind::Property, Dimensionality::Punctual),
                SpatialObject::new("Z", ObjectKind::Property, Dimensionality::Punctual),
                street,
            ],
            vec![
                RelationRecord::new("R1", "A", "S", RawRelation::Juxta),
                RelationRecord::new("R2", "B", "S", RawRelation::Juxta).on_segment("s2"),
            ],
        )
        .unwrap();
        let w = validate_database(&db);
        assert!(w.contains(&Warning::Isolate { object: "Z".into() }));
        assert!(w.contains(&Warning::StreetWithoutLength { object: "S".into() }));
        assert!(w.contains(&Warning::UnassignedSegment {
            relation: "R1".into(),
            object: "S".into()
        }));
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn connected_triangle_has_no_warnings() {
        let obj = |id: &str| SpatialObject::new(id, ObjectKind::Property, Dimensionality::Punctual);
        let db = Database::new(
            vec![obj("A"), obj("B"), obj("C")],
            vec![
                RelationRecord::new("R1", "A", "B", RawRelation::Juxta),
                RelationRecord::new("R2", "B", "C", RawRelation::Juxta),
                RelationRecord::new("R3", "C", "A", RawRelation::Juxta),
            ],
        )
        .unwrap();
        assert!(validate_database(&db).is_empty());
    }
}
