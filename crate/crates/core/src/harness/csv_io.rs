//! Round logs as CSV: `rep,t,bid,m,won,v,gain,cum_regret`.
//!
//! Floats are written with 17 significant digits so they read back
//! bit-for-bit. `won` is `1` or `0`; `v` is empty on lost rounds.

use std::io::{Read, Write};

use super::run::{RoundRecord, RunLog};
use super::HarnessError;

pub const HEADER: [&str; 8] = ["rep", "t", "bid", "m", "won", "v", "gain", "cum_regret"];

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_records<'a, W: Write>(
    records: impl IntoIterator<Item = &'a RoundRecord>,
    out: W,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.rep.to_string(),
            r.t.to_string(),
            fmt_f64(r.bid),
            fmt_f64(r.m),
            if r.won { "1" } else { "0" }.to_string(),
            r.v.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.gain),
            fmt_f64(r.cum_regret),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_log<W: Write>(log: &RunLog, out: W) -> Result<(), HarnessError> {
    write_records(log.replications.iter().flat_map(|r| &r.rounds), out)
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RoundRecord>, HarnessError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(HarnessError::Csv(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |what: &str| HarnessError::Csv(format!("row {}: bad {what}", line + 1));
        let int = |i: usize, what: &str| row[i].parse::<u64>().map_err(|_| bad(what));
        let float = |i: usize, what: &str| row[i].parse::<f64>().map_err(|_| bad(what));
        let won = match &row[4] {
            "1" => true,
            "0" => false,
            _ => return Err(bad("won")),
        };
        let v = if row[5].is_empty() { None } else { Some(float(5, "v")?) };
        if v.is_some() != won {
            return Err(bad("v (must be present exactly on won rounds)"));
        }
        out.push(RoundRecord {
            rep: int(0, "rep")?,
            t: int(1, "t")?,
            bid: float(2, "bid")?,
            m: float(3, "m")?,
            won,
            v,
            gain: float(6, "gain")?,
            cum_regret: float(7, "cum_regret")?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record() -> impl Strategy<Value = RoundRecord> {
        (
            0u64..100,
            1u64..10_000,
            0.0f64..=1.0,
            1e-9f64..=1.0,
            prop::option::of(0.0f64..=1.0),
            -1e3f64..1e3,
            -1e3f64..1e3,
        )
            .prop_map(|(rep, t, bid, m, v, gain, cum_regret)| RoundRecord {
                rep,
                t,
                bid,
                m,
                won: v.is_some(),
                v,
                gain,
                cum_regret,
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(records in prop::collection::vec(record(), 0..50)) {
            let mut buf = Vec::new();
            write_records(&records, &mut buf).unwrap();
            let back = read_records(buf.as_slice()).unwrap();
            prop_assert_eq!(back, records);
        }
    }

    #[test]
    fn header_and_empty_value() {
        let r = RoundRecord {
            rep: 0,
            t: 1,
            bid: 0.25,
            m: 0.5,
            won: false,
            v: None,
            gain: 0.5,
            cum_regret: 0.0,
        };
        let mut buf = Vec::new();
        write_records([&r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("rep,t,bid,m,won,v,gain,cum_regret"));
        assert_eq!(
            lines.next(),
            Some("0,1,2.5000000000000000e-1,5.0000000000000000e-1,0,,5.0000000000000000e-1,0.0000000000000000e0")
        );
    }

    #[test]
    fn rejects_inconsistent_rows() {
        let text = "rep,t,bid,m,won,v,gain,cum_regret\n0,1,0.5,0.4,0,0.9,0.4,0\n";
        assert!(read_records(text.as_bytes()).is_err());
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
    }
}
