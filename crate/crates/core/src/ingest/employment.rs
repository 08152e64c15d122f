use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use super::{csv_reader, read_text, Columns, ParseReport};
use crate::calendar::YearMonth;
use crate::error::{Error, Result};

/// Ownership codes of the quarterly employment census.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ownership {
    Total,
    Federal,
    State,
    Local,
    Private,
}

impl Ownership {
    pub const ALL: [Ownership; 5] = [
        Ownership::Total,
        Ownership::Federal,
        Ownership::State,
        Ownership::Local,
        Ownership::Private,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Ownership::Total => "0",
            Ownership::Federal => "1",
            Ownership::State => "2",
            Ownership::Local => "3",
            Ownership::Private => "5",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Ownership::Total => "total",
            Ownership::Federal => "federal",
            Ownership::State => "state",
            Ownership::Local => "local",
            Ownership::Private => "private",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.code() == code.trim())
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == name.trim())
    }
}

/// The thirteen industry aggregates analyzed: all industries, the goods and
/// service domains, and ten NAICS supersectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sector {
    Total,
    Goods,
    Service,
    NaturalResourcesMining,
    Construction,
    Manufacturing,
    TradeTransportUtilities,
    Information,
    Financial,
    ProfessionalBusiness,
    EducationHealth,
    LeisureHospitality,
    OtherServices,
}

impl Sector {
    pub const ALL: [Sector; 13] = [
        Sector::Total,
        Sector::Goods,
        Sector::Service,
        Sector::NaturalResourcesMining,
        Sector::Construction,
        Sector::Manufacturing,
        Sector::TradeTransportUtilities,
        Sector::Information,
        Sector::Financial,
        Sector::ProfessionalBusiness,
        Sector::EducationHealth,
        Sector::LeisureHospitality,
        Sector::OtherServices,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Industry code in the quarterly census files.
    pub fn code(self) -> &'static str {
        match self {
            Sector::Total => "10",
            Sector::Goods => "101",
            Sector::Service => "102",
            Sector::NaturalResourcesMining => "1011",
            Sector::Construction => "1012",
            Sector::Manufacturing => "1013",
            Sector::TradeTransportUtilities => "1021",
            Sector::Information => "1022",
            Sector::Financial => "1023",
            Sector::ProfessionalBusiness => "1024",
            Sector::EducationHealth => "1025",
            Sector::LeisureHospitality => "1026",
            Sector::OtherServices => "1027",
        }
    }

    /// Short identifier used in column names (`delta_<name>_m<lag>`).
    pub fn name(self) -> &'static str {
        match self {
            Sector::Total => "total",
            Sector::Goods => "goods",
            Sector::Service => "service",
            Sector::NaturalResourcesMining => "natres_mining",
            Sector::Construction => "construction",
            Sector::Manufacturing => "manufacturing",
            Sector::TradeTransportUtilities => "trade_transport_util",
            Sector::Information => "information",
            Sector::Financial => "financial",
            Sector::ProfessionalBusiness => "prof_business",
            Sector::EducationHealth => "edu_health",
            Sector::LeisureHospitality => "leisure_hospitality",
            Sector::OtherServices => "other_services",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sector::Total => "Total, all industries",
            Sector::Goods => "Goods-producing",
            Sector::Service => "Service-providing",
            Sector::NaturalResourcesMining => "Natural resources and mining",
            Sector::Construction => "Construction",
            Sector::Manufacturing => "Manufacturing",
            Sector::TradeTransportUtilities => "Trade, transportation, and utilities",
            Sector::Information => "Information",
            Sector::Financial => "Financial activities",
            Sector::ProfessionalBusiness => "Professional and business services",
            Sector::EducationHealth => "Education and health services",
            Sector::LeisureHospitality => "Leisure and hospitality",
            Sector::OtherServices => "Other services",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.code() == code.trim())
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name.trim())
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKey {
    pub entity: String,
    pub ownership: Ownership,
    pub sector: Sector,
}

impl SeriesKey {
    pub fn new(entity: impl Into<String>, ownership: Ownership, sector: Sector) -> Self {
        SeriesKey {
            entity: entity.into(),
            ownership,
            sector,
        }
    }
}

pub const FIRST_MONTH: YearMonth = match YearMonth::new(1990, 1) {
    Some(m) => m,
    None => unreachable!(),
};
pub const LAST_MONTH: YearMonth = match YearMonth::new(2021, 12) {
    Some(m) => m,
    None => unreachable!(),
};

/// Monthly employment counts by (entity, ownership, sector).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmploymentPanel {
    pub series: BTreeMap<SeriesKey, BTreeMap<YearMonth, f64>>,
}

impl EmploymentPanel {
    pub fn get(&self, key: &SeriesKey, month: YearMonth) -> Option<f64> {
        self.series.get(key)?.get(&month).copied()
    }

    pub fn series(&self, key: &SeriesKey) -> Option<&BTreeMap<YearMonth, f64>> {
        self.series.get(key)
    }

    pub fn insert(&mut self, key: SeriesKey, month: YearMonth, value: f64) {
        self.series.entry(key).or_default().insert(month, value);
    }

    pub fn n_records(&self) -> usize {
        self.series.values().map(BTreeMap::len).sum()
    }

    pub fn has_entity(&self, entity: &str) -> bool {
        self.series.keys().any(|k| k.entity == entity)
    }

    /// Earliest and latest month present anywhere in the panel.
    pub fn month_span(&self) -> Option<(YearMonth, YearMonth)> {
        let first = self.series.values().filter_map(|s| s.keys().next()).min()?;
        let last = self.series.values().filter_map(|s| s.keys().next_back()).max()?;
        Some((*first, *last))
    }
}

const EMPLOYMENT_COLUMNS: [&str; 8] = [
    "area_fips",
    "own_code",
    "industry_code",
    "year",
    "qtr",
    "month1_emplvl",
    "month2_emplvl",
    "month3_emplvl",
];

/// Parses quarterly rows (`area_fips,own_code,industry_code,year,qtr,month1_emplvl,
/// month2_emplvl,month3_emplvl`) into monthly records.
///
/// The report counts candidate monthly records, three per quarterly row. Rows with
/// unknown ownership or industry codes, an invalid period, or a key already seen
/// are dropped whole; individual months that are empty, negative or non-numeric
/// are dropped singly.
pub fn parse_employment(path: &Path) -> Result<(EmploymentPanel, ParseReport)> {
    let text = read_text(path)?;
    let mut rdr = csv_reader(&text);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(&headers, &EMPLOYMENT_COLUMNS, "employment")?;

    let mut report = ParseReport::default();
    let mut panel = EmploymentPanel::default();
    let drop3 = |report: &mut ParseReport, reason: &str| {
        for _ in 0..3 {
            report.drop_row(reason);
        }
    };
    for rec in rdr.records() {
        report.rows_read += 3;
        let rec = match rec {
            Ok(r) if r.len() == headers.len() => r,
            _ => {
                drop3(&mut report, "malformed_row");
                continue;
            }
        };
        let entity = cols.get(&rec, 0).unwrap_or("").to_string();
        if entity.is_empty() {
            drop3(&mut report, "missing_area");
            continue;
        }
        let Some(ownership) = cols.get(&rec, 1).and_then(Ownership::from_code) else {
            drop3(&mut report, "unknown_ownership");
            continue;
        };
        let Some(sector) = cols.get(&rec, 2).and_then(Sector::from_code) else {
            drop3(&mut report, "unknown_industry");
            continue;
        };
        let year = cols.get(&rec, 3).and_then(|s| s.parse::<i32>().ok());
        let qtr = cols.get(&rec, 4).and_then(|s| s.parse::<u32>().ok());
        let (Some(year), Some(qtr @ 1..=4)) = (year, qtr) else {
            drop3(&mut report, "bad_period");
            continue;
        };
        let first = YearMonth::new(year, 3 * (qtr - 1) + 1).unwrap();
        if first < FIRST_MONTH || first > LAST_MONTH {
            drop3(&mut report, "out_of_range_period");
            continue;
        }
        let key = SeriesKey::new(entity, ownership, sector);
        if panel
            .series(&key)
            .is_some_and(|s| (0..3).any(|i| s.contains_key(&first.offset(i))))
        {
            drop3(&mut report, "duplicate_key");
            continue;
        }
        for i in 0..3 {
            let raw = cols.get(&rec, 5 + i).unwrap_or("");
            if raw.is_empty() {
                report.drop_row("missing_value");
                continue;
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => {
                    panel.insert(key.clone(), first.offset(i as i64), v);
                    report.rows_kept += 1;
                }
                Ok(v) if v.is_finite() => report.drop_row("negative_value"),
                _ => report.drop_row("non_numeric_value"),
            }
        }
    }
    debug_assert!(report.is_balanced());
    Ok((panel, report))
}

/// Writes the panel back in the quarterly layout; months without a value are left empty.
pub fn write_employment(path: &Path, panel: &EmploymentPanel) -> Result<()> {
    let mut out = EMPLOYMENT_COLUMNS.join(",");
    out.push('\n');
    for (key, series) in &panel.series {
        let mut quarters: BTreeMap<(i32, u32), [Option<f64>; 3]> = BTreeMap::new();
        for (m, v) in series {
            let q = (m.month() - 1) / 3 + 1;
            quarters.entry((m.year(), q)).or_insert([None; 3])[((m.month() - 1) % 3) as usize] = Some(*v);
        }
        for ((year, q), vals) in quarters {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                key.entity,
                key.ownership.code(),
                key.sector.code(),
                year,
                q,
                super::fmt_opt(vals[0]),
                super::fmt_opt(vals[1]),
                super::fmt_opt(vals[2]),
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "area_fips,own_code,industry_code,year,qtr,month1_emplvl,month2_emplvl,month3_emplvl\n";

    #[test]
    fn four_quarters_make_twelve_months() {
        let f = write(&format!(
            "{HEADER}22071,5,10,2005,1,100,101,102\n22071,5,10,2005,2,103,104,105\n\
             22071,5,10,2005,3,106,107,108\n22071,5,10,2005,4,109,110,111\n"
        ));
        let (p, rep) = parse_employment(f.path()).unwrap();
        assert_eq!(p.n_records(), 12);
        let key = SeriesKey::new("22071", Ownership::Private, Sector::Total);
        assert_eq!(p.get(&key, YearMonth::new(2005, 8).unwrap()), Some(107.0));
        assert_eq!(rep.rows_kept, 12);
        assert!(rep.is_balanced());
    }

    #[test]
    fn negative_and_unknown_codes_dropped() {
        let f = write(&format!(
            "{HEADER}22071,5,10,2005,1,-5,101,abc\n22071,9,10,2005,2,1,1,1\n\
             22071,5,1029,2005,2,1,1,1\n22071,5,10,1989,4,1,1,1\n"
        ));
        let (p, rep) = parse_employment(f.path()).unwrap();
        assert_eq!(p.n_records(), 1);
        assert_eq!(rep.dropped["negative_value"], 1);
        assert_eq!(rep.dropped["non_numeric_value"], 1);
        assert_eq!(rep.dropped["unknown_ownership"], 3);
        assert_eq!(rep.dropped["unknown_industry"], 3);
        assert_eq!(rep.dropped["out_of_range_period"], 3);
        assert!(rep.is_balanced());
    }

    #[test]
    fn duplicate_quarter_is_dropped() {
        let f = write(&format!(
            "{HEADER}01001,5,1012,2005,1,10,11,12\n01001,5,1012,2005,1,20,21,22\n"
        ));
        let (p, rep) = parse_employment(f.path()).unwrap();
        let key = SeriesKey::new("01001", Ownership::Private, Sector::Construction);
        assert_eq!(p.get(&key, YearMonth::new(2005, 1).unwrap()), Some(10.0));
        assert_eq!(rep.dropped["duplicate_key"], 3);
    }

    #[test]
    fn codes_round_trip() {
        for s in Sector::ALL {
            assert_eq!(Sector::from_code(s.code()), Some(s));
            assert_eq!(Sector::from_name(s.name()), Some(s));
        }
        for o in Ownership::ALL {
            assert_eq!(Ownership::from_code(o.code()), Some(o));
        }
    }
}
