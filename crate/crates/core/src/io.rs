//! CSV ingestion of census-style inputs and emission of reports.
//!
//! Every input file has a required header row. Errors carry the file path and
//! the 1-based line number of the offending row. Outputs are UTF-8, comma
//! separated, `\n` terminated.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use crate::bayes::DemandObservation;
use crate::card_ledger::{DemandSeries, FlowCounts, FlowData, FlowRates, StateFlows};
use crate::coverage::AgeProfile;
use crate::demography::{
    AgeAxis, AgePyramid, FertilityConfig, RegionId, RegionLevel, Sex, SurvivalSchedule,
};
use crate::error::{Error, Result};
use crate::projection::ProjectionSeries;

pub const POPULATION_HEADER: [&str; 4] = ["region", "sex", "age", "count"];
pub const SURVIVAL_HEADER: [&str; 4] = ["region", "sex", "age", "survival"];
pub const FERTILITY_HEADER: [&str; 2] = ["key", "value"];
pub const RATE_FLOWS_HEADER: [&str; 6] = ["state", "population", "b", "d", "m", "e"];
pub const COUNT_FLOWS_HEADER: [&str; 7] = ["state", "births", "deaths", "in", "out", "immig", "emig"];
pub const OBSERVATIONS_HEADER: [&str; 3] = ["year", "count", "exposure"];
pub const UNKNOWN_AGE_HEADER: [&str; 3] = ["region", "sex", "count"];
pub const PROFILE_HEADER: [&str; 3] = ["sex", "age", "weight"];
pub const DEMAND_HEADER: [&str; 4] = ["year", "new_cards_male", "new_cards_female", "returned_cards"];

/// Row-level context for error messages.
struct Ctx<'a> {
    path: &'a Path,
    line: u64,
}

impl Ctx<'_> {
    fn parse_err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn data_err(&self, message: impl Into<String>) -> Error {
        Error::Data {
            path: self.path.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn field<T: FromStr>(&self, rec: &StringRecord, idx: usize, name: &str) -> Result<T> {
        let raw = rec
            .get(idx)
            .ok_or_else(|| self.parse_err(format!("missing column {name}")))?
            .trim();
        raw.parse()
            .map_err(|_| self.parse_err(format!("invalid {name} {raw:?}")))
    }

    fn non_negative(&self, rec: &StringRecord, idx: usize, name: &str) -> Result<f64> {
        let v: f64 = self.field(rec, idx, name)?;
        if !v.is_finite() {
            return Err(self.parse_err(format!("{name} {v} is not finite")));
        }
        if v < 0.0 {
            return Err(self.data_err(format!("negative {name} {v}")));
        }
        Ok(v)
    }

    fn sex(&self, rec: &StringRecord, idx: usize) -> Result<Sex> {
        let raw = rec.get(idx).unwrap_or("");
        raw.parse()
            .map_err(|_| self.parse_err(format!("invalid sex {raw:?}")))
    }
}

/// Reads a CSV file, checks its header against one of `accepted` and returns
/// the index of the matching header with the data records and their lines.
fn read_table(path: &Path, accepted: &[&[&str]]) -> Result<(usize, Vec<(u64, StringRecord)>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect::<Vec<_>>();
    let which = accepted
        .iter()
        .position(|want| header.len() == want.len() && header.iter().zip(*want).all(|(a, b)| a == b))
        .ok_or_else(|| {
            let want: Vec<String> = accepted.iter().map(|h| h.join(",")).collect();
            let message = if header.is_empty() || header.iter().all(String::is_empty) {
                format!("missing header, expected {}", want.join(" or "))
            } else {
                format!(
                    "unrecognized header {:?}, expected {}",
                    header.join(","),
                    want.join(" or ")
                )
            };
            Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message,
            }
        })?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, rec));
    }
    Ok((which, rows))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(file))
}

fn write_rec<I, S>(w: &mut csv::Writer<File>, path: &Path, rec: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(rec).map_err(|e| csv_error(path, e))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn region_id(ctx: &Ctx<'_>, code: &str) -> Result<RegionId> {
    RegionId::new(code, RegionLevel::Region).map_err(|_| ctx.parse_err("empty region code"))
}

/// Loads `region,sex,age,count` rows into one pyramid per region, in order of
/// first appearance. Cells absent from the file stay absent.
pub fn load_population_csv(
    path: impl AsRef<Path>,
    axis: AgeAxis,
    time_label: i32,
) -> Result<Vec<AgePyramid>> {
    let path = path.as_ref();
    let (_, rows) = read_table(path, &[&POPULATION_HEADER])?;
    let mut order: Vec<String> = Vec::new();
    let mut pyramids: HashMap<String, AgePyramid> = HashMap::new();
    for (line, rec) in rows {
        let ctx = Ctx { path, line };
        let code = rec.get(0).unwrap_or("").to_string();
        let region = region_id(&ctx, &code)?;
        let sex = ctx.sex(&rec, 1)?;
        let age: usize = ctx.field(&rec, 2, "age")?;
        if !axis.contains(age) {
            return Err(ctx.data_err(format!(
                "age {age} exceeds the last age {}",
                axis.max_age()
            )));
        }
        let count = ctx.non_negative(&rec, 3, "count")?;
        let pyr = pyramids.entry(code.clone()).or_insert_with(|| {
            order.push(code.clone());
            AgePyramid::new(region, time_label)
        });
        if pyr.get(sex, age).is_some() {
            return Err(ctx.data_err(format!(
                "duplicate cell region {code} sex {sex} age {age}"
            )));
        }
        pyr.set(sex, age, count);
    }
    Ok(order
        .into_iter()
        .map(|c| pyramids.remove(&c).expect("region recorded on insert"))
        .collect())
}

/// Writes pyramids as `region,sex,age,count` with counts in shortest
/// round-trip form.
pub fn write_population_csv(pyramids: &[AgePyramid], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    write_rec(&mut w, path, POPULATION_HEADER)?;
    for p in pyramids {
        for (sex, age, count) in p.cells() {
            write_rec(
                &mut w,
                path,
                [
                    p.region().code().to_string(),
                    sex.code().to_string(),
                    age.to_string(),
                    count.to_string(),
                ],
            )?;
        }
    }
    finish(w, path)
}

/// Loads `region,sex,age,survival` rows. Each region must give every age from
/// 0 to its last age for both sexes.
pub fn load_survival_csv(path: impl AsRef<Path>) -> Result<Vec<SurvivalSchedule>> {
    let path = path.as_ref();
    let (_, rows) = read_table(path, &[&SURVIVAL_HEADER])?;
    let mut order: Vec<String> = Vec::new();
    let mut cells: HashMap<String, BTreeMap<(Sex, usize), f64>> = HashMap::new();
    for (line, rec) in &rows {
        let ctx = Ctx { path, line: *line };
        let code = rec.get(0).unwrap_or("").to_string();
        region_id(&ctx, &code)?;
        let sex = ctx.sex(rec, 1)?;
        let age: usize = ctx.field(rec, 2, "age")?;
        let p: f64 = ctx.field(rec, 3, "survival")?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ctx.data_err(format!("survival {p} is outside [0, 1]")));
        }
        let entry = cells.entry(code.clone()).or_insert_with(|| {
            order.push(code.clone());
            BTreeMap::new()
        });
        if entry.insert((sex, age), p).is_some() {
            return Err(ctx.data_err(format!(
                "duplicate cell region {code} sex {sex} age {age}"
            )));
        }
    }
    let end_line = rows.last().map(|(l, _)| *l).unwrap_or(1);
    order
        .into_iter()
        .map(|code| {
            let map = &cells[&code];
            let max_age = map.keys().map(|&(_, a)| a).max().unwrap_or(0);
            let mut vecs = [vec![0.0; max_age + 1], vec![0.0; max_age + 1]];
            for sex in Sex::ALL {
                for age in 0..=max_age {
                    vecs[sex.index()][age] = *map.get(&(sex, age)).ok_or_else(|| Error::Data {
                        path: path.to_path_buf(),
                        line: end_line,
                        message: format!("region {code} has no survival for sex {sex} age {age}"),
                    })?;
                }
            }
            let [male, female] = vecs;
            let region = RegionId::new(code.clone(), RegionLevel::Region)?;
            SurvivalSchedule::new(region, male, female).map_err(|e| Error::Data {
                path: path.to_path_buf(),
                line: end_line,
                message: format!("region {code}: {e}"),
            })
        })
        .collect()
}

/// Writes schedules as `region,sex,age,survival`.
pub fn write_survival_csv(schedules: &[SurvivalSchedule], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    write_rec(&mut w, path, SURVIVAL_HEADER)?;
    for s in schedules {
        for sex in Sex::ALL {
            for (age, p) in s.one_year_slice(sex).iter().enumerate() {
                write_rec(
                    &mut w,
                    path,
                    [
                        s.region().code().to_string(),
                        sex.code().to_string(),
                        age.to_string(),
                        p.to_string(),
                    ],
                )?;
            }
        }
    }
    finish(w, path)
}

/// Loads a `key,value` fertility file. Integer keys are ages with their
/// F(x); the named keys `eligible_proportion`, `sex_ratio_at_birth` and
/// `infant_mortality` are all required.
pub fn load_fertility_csv(path: impl AsRef<Path>) -> Result<FertilityConfig> {
    let path = path.as_ref();
    let (_, rows) = read_table(path, &[&FERTILITY_HEADER])?;
    let mut scalars: BTreeMap<&str, f64> = BTreeMap::new();
    let mut rates = Vec::new();
    for (line, rec) in &rows {
        let ctx = Ctx { path, line: *line };
        let key = rec.get(0).unwrap_or("");
        let value: f64 = ctx.field(rec, 1, "value")?;
        if let Ok(age) = key.parse::<usize>() {
            rates.push((ctx.line, age, value));
            continue;
        }
        let name = match key {
            "eligible_proportion" => "eligible_proportion",
            "sex_ratio_at_birth" => "sex_ratio_at_birth",
            "infant_mortality" => "infant_mortality",
            other => return Err(ctx.parse_err(format!("unknown fertility key {other:?}"))),
        };
        if scalars.insert(name, value).is_some() {
            return Err(ctx.data_err(format!("duplicate key {name}")));
        }
    }
    let end_line = rows.last().map(|(l, _)| *l).unwrap_or(1);
    let get = |name: &str| {
        scalars.get(name).copied().ok_or_else(|| Error::Data {
            path: path.to_path_buf(),
            line: end_line,
            message: format!("missing required key {name}"),
        })
    };
    let mut fert = FertilityConfig::new(
        get("eligible_proportion")?,
        get("sex_ratio_at_birth")?,
        get("infant_mortality")?,
    )
    .map_err(|e| Error::Data {
        path: path.to_path_buf(),
        line: end_line,
        message: e.to_string(),
    })?;
    for (line, age, rate) in rates {
        fert.set_rate(age, rate).map_err(|e| Error::Data {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
    }
    Ok(fert)
}

pub fn write_fertility_csv(fert: &FertilityConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    write_rec(&mut w, path, FERTILITY_HEADER)?;
    for age in FertilityConfig::reproductive_ages() {
        write_rec(&mut w, path, [age.to_string(), fert.rate(age).to_string()])?;
    }
    for (k, v) in [
        ("eligible_proportion", fert.eligible_proportion()),
        ("sex_ratio_at_birth", fert.sex_ratio_at_birth()),
        ("infant_mortality", fert.infant_mortality()),
    ] {
        write_rec(&mut w, path, [k.to_string(), v.to_string()])?;
    }
    finish(w, path)
}

/// Loads state flows. The header selects the schema: rates
/// (`state,population,b,d,m,e`) or counts
/// (`state,births,deaths,in,out,immig,emig`). Count files must satisfy
/// interstate closure.
pub fn load_flows_csv(path: impl AsRef<Path>) -> Result<Vec<StateFlows>> {
    let path = path.as_ref();
    let (schema, rows) = read_table(path, &[&RATE_FLOWS_HEADER, &COUNT_FLOWS_HEADER])?;
    let mut seen = BTreeMap::new();
    let mut flows = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let ctx = Ctx { path, line: *line };
        let code = rec.get(0).unwrap_or("");
        let state = RegionId::new(code, RegionLevel::State)
            .map_err(|_| ctx.parse_err("empty state code"))?;
        if seen.insert(code.to_string(), *line).is_some() {
            return Err(ctx.data_err(format!("duplicate state {code}")));
        }
        let expected = if schema == 0 { 6 } else { 7 };
        if rec.len() != expected {
            return Err(ctx.parse_err(format!(
                "expected {expected} fields, found {}",
                rec.len()
            )));
        }
        let f = if schema == 0 {
            let rates = FlowRates {
                population: ctx.non_negative(rec, 1, "population")?,
                birth_rate: ctx.non_negative(rec, 2, "b")?,
                death_rate: ctx.non_negative(rec, 3, "d")?,
                in_rate: ctx.non_negative(rec, 4, "m")?,
                out_rate: ctx.non_negative(rec, 5, "e")?,
            };
            StateFlows::from_rates(state, rates)?
        } else {
            let count = |i, name| -> Result<u64> {
                let raw = rec.get(i).unwrap_or("");
                if raw.starts_with('-') {
                    return Err(ctx.data_err(format!("negative {name} {raw}")));
                }
                ctx.field(rec, i, name)
            };
            StateFlows::from_counts(
                state,
                FlowCounts {
                    births: count(1, "births")?,
                    deaths: count(2, "deaths")?,
                    interstate_in: count(3, "in")?,
                    interstate_out: count(4, "out")?,
                    immigration: count(5, "immig")?,
                    emigration: count(6, "emig")?,
                },
            )
        };
        flows.push(f);
    }
    if schema == 1 {
        let counts: Vec<FlowCounts> = flows.iter().filter_map(|f| f.counts().copied()).collect();
        crate::card_ledger::check_interstate_closure(&counts).map_err(|e| Error::Data {
            path: path.to_path_buf(),
            line: rows.last().map(|(l, _)| *l).unwrap_or(1),
            message: e.to_string(),
        })?;
    }
    Ok(flows)
}

/// Writes flows in the schema of the records. All records must share one
/// schema.
pub fn write_flows_csv(flows: &[StateFlows], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let rate_based = flows.first().map(StateFlows::is_rate_based).unwrap_or(true);
    if flows.iter().any(|f| f.is_rate_based() != rate_based) {
        return Err(Error::domain("cannot write a mix of rate and count flows"));
    }
    let mut w = writer(path)?;
    if rate_based {
        write_rec(&mut w, path, RATE_FLOWS_HEADER)?;
    } else {
        write_rec(&mut w, path, COUNT_FLOWS_HEADER)?;
    }
    for f in flows {
        let code = f.state.code().to_string();
        match &f.data {
            FlowData::Rates(r) => write_rec(
                &mut w,
                path,
                [
                    code,
                    r.population.to_string(),
                    r.birth_rate.to_string(),
                    r.death_rate.to_string(),
                    r.in_rate.to_string(),
                    r.out_rate.to_string(),
                ],
            )?,
            FlowData::Counts(c) => write_rec(
                &mut w,
                path,
                [
                    code,
                    c.births.to_string(),
                    c.deaths.to_string(),
                    c.interstate_in.to_string(),
                    c.interstate_out.to_string(),
                    c.immigration.to_string(),
                    c.emigration.to_string(),
                ],
            )?,
        }
    }
    finish(w, path)
}

pub fn load_observations_csv(path: impl AsRef<Path>) -> Result<Vec<DemandObservation>> {
    let path = path.as_ref();
    let (_, rows) = read_table(path, &[&OBSERVATIONS_HEADER])?;
    rows.iter()
        .map(|(line, rec)| {
            let ctx = Ctx { path, line: *line };
            let year: i32 = ctx.field(rec, 0, "year")?;
            if rec.get(1).is_some_and(|c| c.starts_with('-')) {
                return Err(ctx.data_err("negative count"));
            }
            let count: u64 = ctx.field(rec, 1, "count")?;
            let exposure: f64 = ctx.field(rec, 2, "exposure")?;
            DemandObservation::new(year, count, exposure).map_err(|e| ctx.data_err(e.to_string()))
        })
        .collect()
}

/// Loads `region,sex,count` unknown-age totals keyed by region code.
pub fn load_unknown_age_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, [f64; 2]>> {
    let path = path.as_ref();
    let (_, rows) = read_table(path, &[&UNKNOWN_AGE_HEADER])?;
    let mut out: BTreeMap<String, [f64; 2]> = BTreeMap::new();
    let mut seen = BTreeMap::new();
    for (line, rec) in &rows {
        let ctx = Ctx { path, line: *line };
        let code = rec.get(0).unwrap_or("").to_string();
        region_id(&ctx, &code)?;
        let sex = ctx.sex(rec, 1)?;
        let count = ctx.non_negative(rec, 2, "count")?;
        if seen.insert((code.clone(), sex), *line).is_some() {
            return Err(ctx.data_err(format!("duplicate row for region {code} sex {sex}")));
        }
        out.entry(code).or_default()[sex.index()] = count;
    }
    Ok(out)
}

/// Loads a `sex,age,weight` profile whose weights sum to one.
pub fn load_profile_csv(path: impl AsRef<Path>) -> Result<AgeProfile> {
    let path = path.as_ref();
    let (_, rows) = read_table(path, &[&PROFILE_HEADER])?;
    let mut weights = BTreeMap::new();
    for (line, rec) in &rows {
        let ctx = Ctx { path, line: *line };
        let sex = ctx.sex(rec, 0)?;
        let age: usize = ctx.field(rec, 1, "age")?;
        let w = ctx.non_negative(rec, 2, "weight")?;
        if weights.insert((sex, age), w).is_some() {
            return Err(ctx.data_err(format!("duplicate weight for sex {sex} age {age}")));
        }
    }
    AgeProfile::new(weights).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        line: rows.last().map(|(l, _)| *l).unwrap_or(1),
        message: e.to_string(),
    })
}

fn whole(x: f64) -> String {
    format!("{}", x.round_ties_even() as i128)
}

/// Renders the demand series as CSV text, counts rounded half to even.
pub fn demand_csv_string(series: &DemandSeries) -> String {
    let mut out = DEMAND_HEADER.join(",");
    out.push('\n');
    for r in &series.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.year,
            whole(r.new_cards_male),
            whole(r.new_cards_female),
            whole(r.returned_cards)
        );
    }
    out
}

/// Writes `year,new_cards_male,new_cards_female,returned_cards`.
pub fn emit_demand_csv(series: &DemandSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, demand_csv_string(series)).map_err(|e| Error::io(path, e))
}

/// Writes every frame of every series as `region,year,sex,age,count`.
pub fn emit_projection_csv(series: &[ProjectionSeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    write_rec(&mut w, path, ["region", "year", "sex", "age", "count"])?;
    for s in series {
        for frame in s.frames() {
            for (sex, age, count) in frame.cells() {
                write_rec(
                    &mut w,
                    path,
                    [
                        frame.region().code().to_string(),
                        frame.time_label().to_string(),
                        sex.code().to_string(),
                        age.to_string(),
                        count.to_string(),
                    ],
                )?;
            }
        }
    }
    finish(w, path)
}

/// Writes per-year totals, rounded half to even.
pub fn emit_projection_totals_csv(
    series: &[ProjectionSeries],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    write_rec(&mut w, path, ["region", "year", "male", "female", "total"])?;
    for s in series {
        for frame in s.frames() {
            write_rec(
                &mut w,
                path,
                [
                    frame.region().code().to_string(),
                    frame.time_label().to_string(),
                    whole(frame.total_by_sex(Sex::Male)),
                    whole(frame.total_by_sex(Sex::Female)),
                    whole(frame.total()),
                ],
            )?;
        }
    }
    finish(w, path)
}

const CHART_WIDTH: f64 = 800.0;
const CHART_HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Standalone SVG line chart of new cards by sex over the years.
pub fn series_chart_svg(series: &DemandSeries) -> Result<String> {
    let rows = &series.rows;
    if rows.len() < 2 {
        return Err(Error::Insufficient(format!(
            "a chart needs at least 2 years, the series has {}",
            rows.len()
        )));
    }
    let first_year = rows[0].year as f64;
    let last_year = rows[rows.len() - 1].year as f64;
    let y_max = rows
        .iter()
        .flat_map(|r| [r.new_cards_male, r.new_cards_female])
        .fold(0.0f64, f64::max);
    let y_top = nice_ceiling(y_max);
    let plot_w = CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |year: f64| MARGIN_LEFT + (year - first_year) / (last_year - first_year) * plot_w;
    let y_of = |v: f64| MARGIN_TOP + plot_h - v / y_top * plot_h;
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" viewBox="0 0 {CHART_WIDTH} {CHART_HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="25" text-anchor="middle" font-size="16">New cards required per year</text>"#,
        CHART_WIDTH / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="black"/>"#,
        x0 + plot_w
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{MARGIN_TOP:.2}" stroke="black"/>"#
    );

    let step = (rows.len() - 1).div_ceil(10).max(1);
    for r in rows.iter().step_by(step) {
        let x = x_of(r.year as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 20.0,
            r.year
        );
    }
    for i in 0..=4 {
        let v = y_top * i as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            whole(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Year</text>"#,
        x0 + plot_w / 2.0,
        CHART_HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">New cards required</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    let lines: [(&str, &str, fn(&crate::card_ledger::DemandRow) -> f64); 2] = [
        ("Male", "#1f77b4", |r| r.new_cards_male),
        ("Female", "#d62728", |r| r.new_cards_female),
    ];
    for (i, (label, color, value)) in lines.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x_of(r.year as f64), y_of(value(r))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline id="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            label.to_ascii_lowercase(),
            points.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = x0 + plot_w - 110.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{label}</text>"#,
            lx + 32.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes [`series_chart_svg`] to `path`.
pub fn render_series_chart(series: &DemandSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = series_chart_svg(series)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Smallest 1, 2 or 5 × 10^k not below `v`.
fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for m in [1.0, 2.0, 5.0, 10.0] {
        if m * mag >= v {
            return m * mag;
        }
    }
    10.0 * mag
}
