use std::collections::HashMap;
use std::path::Path;

use super::{csv_reader, read_text, Columns, ParseReport};
use crate::error::{Error, Result};

/// A county-level geographic unit represented by its centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: String,
    pub name: String,
    pub state: String,
    pub lat: f64,
    pub lon: f64,
    pub coastal_state: bool,
}

/// Entities sorted by id, with unique ids.
#[derive(Debug, Clone, Default)]
pub struct EntityRegistry {
    entities: Vec<Entity>,
    index: HashMap<String, usize>,
}

impl EntityRegistry {
    pub fn new(mut entities: Vec<Entity>) -> Result<Self> {
        entities.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(Error::DuplicateKey(format!("entity_id={}", e.id)));
            }
        }
        Ok(EntityRegistry { entities, index })
    }

    pub fn get(&self, id: &str) -> Option<&Entity> {
        self.index.get(id).map(|&i| &self.entities[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Entity> {
        self.entities.iter()
    }

    pub fn as_slice(&self) -> &[Entity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

/// US states plus territories: American Samoa in the south, Alaska in the
/// north, Guam and the Northern Mariana Islands west of the antimeridian.
pub fn plausible_us_centroid(lat: f64, lon: f64) -> bool {
    (-15.0..=72.0).contains(&lat) && ((-180.0..=-64.0).contains(&lon) || (144.0..180.0).contains(&lon))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "y" => Some(true),
        "0" | "false" | "f" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Parses `entity_id,name,state,lat,lon,coastal_state`.
pub fn parse_entities(path: &Path) -> Result<(EntityRegistry, ParseReport)> {
    let text = read_text(path)?;
    let mut rdr = csv_reader(&text);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(
        &headers,
        &["entity_id", "name", "state", "lat", "lon", "coastal_state"],
        "entities",
    )?;
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for rec in rdr.records() {
        report.rows_read += 1;
        let rec = match rec {
            Ok(r) if r.len() == headers.len() => r,
            _ => {
                report.drop_row("malformed_row");
                continue;
            }
        };
        let id = cols.get(&rec, 0).unwrap_or("").to_string();
        if id.is_empty() {
            report.drop_row("missing_id");
            continue;
        }
        let lat = cols.get(&rec, 3).and_then(|s| s.parse::<f64>().ok());
        let lon = cols.get(&rec, 4).and_then(|s| s.parse::<f64>().ok());
        let (Some(lat), Some(lon)) = (lat, lon) else {
            report.drop_row("bad_position");
            continue;
        };
        if !plausible_us_centroid(lat, lon) {
            report.drop_row("implausible_centroid");
            continue;
        }
        let Some(coastal_state) = cols.get(&rec, 5).and_then(parse_bool) else {
            report.drop_row("bad_coastal_flag");
            continue;
        };
        out.push(Entity {
            id,
            name: cols.get(&rec, 1).unwrap_or("").to_string(),
            state: cols.get(&rec, 2).unwrap_or("").to_string(),
            lat,
            lon,
            coastal_state,
        });
        report.rows_kept += 1;
    }
    Ok((EntityRegistry::new(out)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_and_rejects_duplicates() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(
            b"entity_id,name,state,lat,lon,coastal_state\n\
              22071,\"Orleans Parish, LA\",LA,29.95,-90.07,true\n\
              72127,San Juan,PR,18.4,-66.06,1\n\
              99999,Nowhere,XX,10.0,10.0,0\n",
        )
        .unwrap();
        let (reg, rep) = parse_entities(f.path()).unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.get("22071").unwrap().name, "Orleans Parish, LA");
        assert!(reg.get("72127").unwrap().coastal_state);
        assert_eq!(rep.dropped["implausible_centroid"], 1);

        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"entity_id,name,state,lat,lon,coastal_state\n1,a,LA,30,-90,1\n1,b,LA,31,-90,1\n")
            .unwrap();
        assert!(matches!(parse_entities(f.path()), Err(Error::DuplicateKey(_))));
    }

    #[test]
    fn territory_bounds() {
        assert!(plausible_us_centroid(13.44, 144.79)); // Guam
        assert!(plausible_us_centroid(-14.3, -170.7)); // American Samoa
        assert!(plausible_us_centroid(64.8, -147.7));
        assert!(!plausible_us_centroid(51.5, -0.1));
    }
}
