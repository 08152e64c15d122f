//! Year-month arithmetic for monthly panels.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};

use crate::error::Error;

/// A calendar month. Ordered chronologically; arithmetic is in whole months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub const fn new(year: i32, month: u32) -> Option<Self> {
        if month >= 1 && month <= 12 {
            Some(YearMonth { year, month })
        } else {
            None
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    /// Months since January of year 0.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ord: i64) -> Self {
        YearMonth {
            year: ord.div_euclid(12) as i32,
            month: ord.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `other` to `self`.
    pub fn months_since(self, other: YearMonth) -> i64 {
        self.ordinal() - other.ordinal()
    }

    pub fn of_date(date: NaiveDate) -> Self {
        YearMonth {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid year-month")
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| Error::format(format!("bad year-month '{s}'")))?;
        let year: i32 = y.parse().map_err(|_| Error::format(format!("bad year in '{s}'")))?;
        let month: u32 = m.parse().map_err(|_| Error::format(format!("bad month in '{s}'")))?;
        YearMonth::new(year, month).ok_or_else(|| Error::format(format!("bad month in '{s}'")))
    }
}

/// Inclusive range of months.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonthRange {
    pub start: YearMonth,
    pub end: YearMonth,
}

impl MonthRange {
    pub fn new(start: YearMonth, end: YearMonth) -> Option<Self> {
        (start <= end).then_some(MonthRange { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end.months_since(self.start) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, ym: YearMonth) -> Option<usize> {
        let d = ym.months_since(self.start);
        (d >= 0 && ym <= self.end).then_some(d as usize)
    }

    pub fn month_at(&self, idx: usize) -> YearMonth {
        self.start.offset(idx as i64)
    }

    pub fn iter(&self) -> impl Iterator<Item = YearMonth> + '_ {
        (0..self.len()).map(|i| self.month_at(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinal_round_trip_and_offsets() {
        let ym = YearMonth::new(2005, 8).unwrap();
        assert_eq!(YearMonth::from_ordinal(ym.ordinal()), ym);
        assert_eq!(ym.offset(-8).to_string(), "2004-12");
        assert_eq!(ym.offset(5).to_string(), "2006-01");
        assert_eq!(ym.offset(5).months_since(ym), 5);
        assert_eq!("2005-08".parse::<YearMonth>().unwrap(), ym);
        assert!("2005-13".parse::<YearMonth>().is_err());
    }

    #[test]
    fn month_range_indexing() {
        let r = MonthRange::new(YearMonth::new(2019, 11).unwrap(), YearMonth::new(2020, 2).unwrap()).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.index_of(YearMonth::new(2020, 1).unwrap()), Some(2));
        assert_eq!(r.index_of(YearMonth::new(2020, 3).unwrap()), None);
        assert_eq!(r.index_of(YearMonth::new(2019, 10).unwrap()), None);
    }
}
