//! Pipeline stages. Each reads raw inputs or upstream artifacts, writes its
//! outputs into the output directory and records both in the manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use stormpanel_core::econometrics::{
    did_event_study, did_to_csv, fit_fixed_effects, fit_to_csv, DidParams, OutcomePanel, PanelDesign,
};
use stormpanel_core::hazard::{
    annotate_translation_speed, attach_precip, incidents_to_csv, mask_overland, match_incidents, read_incidents,
    Incident,
};
use stormpanel_core::ingest::{
    interpolate_covariates, parse_covariates, parse_employment, parse_entities, parse_landmask, parse_precip,
    parse_tracks, EmploymentPanel, EntityRegistry, MonthlyCovariates, ParseReport, TrackSet,
};
use stormpanel_core::panel::{
    build_event_table, composite_matrix, composites_to_csv, conditioned_distribution, event_table_to_csv,
    read_event_table, Condition, EventRow, TableParams, MIN_GROUP_SIZE,
};
use stormpanel_core::patterns::{
    self, extreme_composites, fit_pca, loadings_to_csv, membership_to_csv, standardize, variance_to_csv, FeatureMatrix,
    DEFAULT_PCA_FEATURES,
};
use stormpanel_core::predict::{
    cross_validate, cv_to_csv, feature_importance, importance_to_csv, scenario_distribution_to_csv,
    scenario_histogram_to_csv, scenario_predict, scenario_summary_to_csv, Dataset, FeatureSpec, HistogramSpec,
    ModelKind, Predictor,
};
use stormpanel_core::textio::{fmt_opt, write_atomic};
use stormpanel_core::{Error as CoreError, MonthRange, Sector};

use crate::config::{check_condition, RunConfig, INPUT_KEYS};
use crate::error::CliError;
use crate::manifest::{hash_file, InputFile, RunManifest, StageRecord, ARTIFACT_VERSION, INPUT_PREFIX};

pub const INCIDENTS_FILE: &str = "incidents.csv";
pub const EVENTS_FILE: &str = "events.csv";

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub cond: Option<String>,
    pub force: bool,
    pub seed: Option<u64>,
    pub wind_factor: Option<f64>,
    pub precip_factor: Option<f64>,
}

pub struct Pipeline {
    pub cfg: RunConfig,
    pub cond: String,
    force: bool,
    out: PathBuf,
    manifest: RunManifest,
    input_hashes: BTreeMap<String, String>,
}

struct Stage {
    key: String,
    tag: &'static str,
    start: Instant,
    rec: StageRecord,
}

impl Stage {
    fn count(&mut self, name: impl Into<String>, v: usize) {
        self.rec.counts.insert(name.into(), v as u64);
    }

    fn report(&mut self, prefix: &str, r: &ParseReport) {
        self.count(format!("{prefix}_rows_read"), r.rows_read);
        self.count(format!("{prefix}_rows_kept"), r.rows_kept);
        for (why, n) in &r.dropped {
            self.count(format!("{prefix}_dropped_{why}"), *n);
        }
    }

    fn err(&self) -> impl FnOnce(CoreError) -> CliError + '_ {
        CliError::stage(self.tag)
    }
}

fn sector_file(prefix: &str, s: Sector) -> String {
    format!("{prefix}_{}.csv", s.name())
}

impl Pipeline {
    pub fn new(mut cfg: RunConfig, opts: &Options) -> Result<Self, CliError> {
        if let Some(seed) = opts.seed {
            cfg.seed = seed;
        }
        if let Some(f) = opts.wind_factor {
            cfg.wind_factor = f;
        }
        if let Some(f) = opts.precip_factor {
            cfg.precip_factor = f;
        }
        cfg.validate()?;
        let cond = opts.cond.clone().unwrap_or_else(|| "all".into());
        check_condition(&cond)?;
        let out = cfg.output_dir.clone();
        std::fs::create_dir_all(&out)
            .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", out.display())))?;
        let mut manifest = RunManifest::load(&out)?;
        manifest.artifact_version = ARTIFACT_VERSION.to_string();
        manifest.config_hash = cfg.hash();
        manifest.seed = cfg.seed;
        Ok(Pipeline {
            cfg,
            cond,
            force: opts.force,
            out,
            manifest,
            input_hashes: BTreeMap::new(),
        })
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn input_hash(&mut self, key: &str) -> Result<String, CliError> {
        if let Some(h) = self.input_hashes.get(key) {
            return Ok(h.clone());
        }
        let path = self.cfg.input(key).to_path_buf();
        let h = hash_file(&path)?;
        self.input_hashes.insert(key.to_string(), h.clone());
        self.manifest.inputs.insert(
            key.to_string(),
            InputFile {
                path: path.display().to_string(),
                sha256: h.clone(),
            },
        );
        Ok(h)
    }

    fn begin(&self, key: String, tag: &'static str) -> Stage {
        log::info!("[{tag}] start");
        Stage {
            key,
            tag,
            start: Instant::now(),
            rec: StageRecord {
                config_hash: self.manifest.config_hash.clone(),
                seed: self.cfg.seed,
                ..Default::default()
            },
        }
    }

    fn use_input(&mut self, st: &mut Stage, key: &str) -> Result<PathBuf, CliError> {
        let h = self.input_hash(key)?;
        st.rec.inputs.insert(format!("{INPUT_PREFIX}{key}"), h);
        Ok(self.cfg.input(key).to_path_buf())
    }

    /// Resolves an upstream artifact, refusing when it is missing, was never
    /// recorded, or no longer matches what its producer recorded.
    fn use_artifact(&mut self, st: &mut Stage, file: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(file);
        if !path.is_file() {
            return Err(CliError::Validation(format!(
                "[{}] upstream artifact {} is missing; run the producing stage first",
                st.tag,
                path.display()
            )));
        }
        let current = hash_file(&path)?;
        if let Some(why) = self.staleness(file, &current)? {
            if self.force {
                log::warn!("[{}] {why}; continuing because of --force", st.tag);
            } else {
                return Err(CliError::Stale {
                    stage: st.tag.to_string(),
                    message: format!("{why}; rerun upstream or pass --force"),
                });
            }
        }
        st.rec.inputs.insert(file.to_string(), current);
        Ok(path)
    }

    fn staleness(&mut self, file: &str, current: &str) -> Result<Option<String>, CliError> {
        let Some((producer, rec)) = self.manifest.producer(file) else {
            return Ok(Some(format!("{file} is not recorded in the manifest")));
        };
        let (producer, rec) = (producer.to_string(), rec.clone());
        if rec.outputs.get(file).map(String::as_str) != Some(current) {
            return Ok(Some(format!("{file} changed since stage {producer} wrote it")));
        }
        for (name, h) in &rec.inputs {
            let now = match name.strip_prefix(INPUT_PREFIX) {
                Some(key) if INPUT_KEYS.contains(&key) => self.input_hash(key)?,
                Some(_) => continue,
                None => {
                    let p = self.out.join(name);
                    if !p.is_file() {
                        return Ok(Some(format!("{name}, read by stage {producer}, is gone")));
                    }
                    hash_file(&p)?
                }
            };
            if &now != h {
                return Ok(Some(format!("{name} changed since stage {producer} ran")));
            }
        }
        Ok(None)
    }

    fn emit(&self, st: &mut Stage, file: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(file);
        write_atomic(&path, contents.as_bytes()).map_err(st.err())?;
        st.rec
            .outputs
            .insert(file.to_string(), crate::manifest::sha256_hex(contents.as_bytes()));
        Ok(())
    }

    fn finish(&mut self, mut st: Stage) -> Result<(), CliError> {
        st.rec.wall_ms = st.start.elapsed().as_secs_f64() * 1e3;
        log::info!("[{}] done in {:.1} ms", st.tag, st.rec.wall_ms);
        self.manifest.stages.insert(st.key, st.rec);
        self.manifest.save(&self.out)
    }

    fn condition(&self) -> Condition {
        Condition::named(&self.cond, &self.cfg.thresholds()).expect("condition checked at construction")
    }

    fn load_employment(&mut self, st: &mut Stage) -> Result<(EmploymentPanel, MonthRange), CliError> {
        let path = self.use_input(st, "employment")?;
        let (panel, report) = parse_employment(&path).map_err(st.err())?;
        st.report("employment", &report);
        let (a, b) = panel.month_span().ok_or_else(|| {
            CliError::stage(st.tag)(CoreError::InsufficientData("employment file has no records".into()))
        })?;
        Ok((panel, MonthRange::new(a, b).expect("ordered span")))
    }

    fn load_covariates(&mut self, st: &mut Stage, calendar: MonthRange) -> Result<MonthlyCovariates, CliError> {
        let path = self.use_input(st, "covariates")?;
        let (cov, report) = parse_covariates(&path).map_err(st.err())?;
        st.report("covariates", &report);
        let monthly = interpolate_covariates(&cov, calendar);
        st.count("covariates_entities_incomplete", monthly.missing.len());
        Ok(monthly)
    }

    fn load_entities(&mut self, st: &mut Stage) -> Result<EntityRegistry, CliError> {
        let path = self.use_input(st, "entities")?;
        let (reg, report) = parse_entities(&path).map_err(st.err())?;
        st.report("entities", &report);
        Ok(reg)
    }

    fn load_incidents(&mut self, st: &mut Stage) -> Result<Vec<Incident>, CliError> {
        let path = self.use_artifact(st, INCIDENTS_FILE)?;
        let (incs, _) = read_incidents(&path).map_err(st.err())?;
        st.count("incidents", incs.len());
        Ok(incs)
    }

    fn load_events(&mut self, st: &mut Stage) -> Result<Vec<EventRow>, CliError> {
        let path = self.use_artifact(st, EVENTS_FILE)?;
        let table = read_event_table(&path).map_err(st.err())?;
        let cond = self.condition();
        let rows: Vec<EventRow> = table.rows.into_iter().filter(|r| cond.matches(r)).collect();
        st.count("rows_selected", rows.len());
        Ok(rows)
    }

    /// Tracks, masked to land, matched to entities, with window precipitation.
    pub fn link(&mut self) -> Result<(), CliError> {
        let mut st = self.begin("link".into(), "link");
        let tracks_path = self.use_input(&mut st, "tracks")?;
        let mut tracks = match parse_tracks(&tracks_path) {
            Ok((t, report)) => {
                st.report("tracks", &report);
                t
            }
            Err(CoreError::EmptyInput { .. }) => TrackSet::default(),
            Err(e) => return Err(st.err()(e)),
        };
        if tracks.is_empty() {
            log::warn!(
                "[link] no storm tracks in {}; writing an empty incident file",
                tracks_path.display()
            );
        }
        let mask_path = self.use_input(&mut st, "landmask")?;
        let (mask, report) = parse_landmask(&mask_path).map_err(st.err())?;
        st.report("landmask", &report);
        let precip_path = self.use_input(&mut st, "precip")?;
        let (precip, report) = parse_precip(&precip_path).map_err(st.err())?;
        st.report("precip", &report);
        let entities = self.load_entities(&mut st)?;

        annotate_translation_speed(&mut tracks);
        let (overland, mr) = mask_overland(&tracks, &mask);
        st.count("fixes_over_land", mr.kept);
        st.count("fixes_over_water", mr.over_water);
        st.count("fixes_outside_mask", mr.outside_mask);
        st.count("storms_removed_by_mask", mr.storms_removed);
        let mut incidents = match_incidents(&overland, &entities, self.cfg.radius_km).map_err(st.err())?;
        attach_precip(&mut incidents, &precip, self.cfg.precip_window_days).map_err(st.err())?;
        st.count("incidents", incidents.len());
        st.count(
            "incidents_precip_partial",
            incidents.iter().filter(|i| i.precip_partial).count(),
        );
        st.count(
            "incidents_precip_missing",
            incidents.iter().filter(|i| i.precip3d.is_none()).count(),
        );
        self.emit(&mut st, INCIDENTS_FILE, &incidents_to_csv(&incidents))?;
        self.finish(st)
    }

    /// Incidents joined with employment changes and covariates.
    pub fn table(&mut self) -> Result<(), CliError> {
        let mut st = self.begin("table".into(), "table");
        let incidents = self.load_incidents(&mut st)?;
        let (panel, calendar) = self.load_employment(&mut st)?;
        let entities = self.load_entities(&mut st)?;
        let cov = self.load_covariates(&mut st, calendar)?;
        let params = TableParams {
            ownership: self.cfg.ownership()?,
            min_employment: self.cfg.min_employment,
        };
        let table = build_event_table(&incidents, &panel, &entities, Some(&cov), &params);
        st.count("rows", table.len());
        st.count("rows_overlapping", table.rows.iter().filter(|r| r.overlap).count());
        st.count(
            "rows_without_covariates",
            table.rows.iter().filter(|r| !r.covariates_available()).count(),
        );
        for (why, n) in &table.exclusions {
            st.count(format!("excluded_{why}"), *n);
        }
        self.emit(&mut st, EVENTS_FILE, &event_table_to_csv(&table))?;
        self.finish(st)
    }

    /// Sector × lag composite matrix and Month-1 conditioned distributions.
    pub fn composite(&mut self) -> Result<(), CliError> {
        let mut st = self.begin(format!("composite:{}", self.cond), "composite");
        st.rec.cond = Some(self.cond.clone());
        let rows = self.load_events(&mut st)?;
        let table = stormpanel_core::panel::EventTable {
            rows,
            exclusions: BTreeMap::new(),
        };
        let cells = composite_matrix(&table, &Condition::All, &Sector::ALL, 0..=12).map_err(st.err())?;
        st.count("cells", cells.len());
        let mut dist = String::from("sector,lag,n,mean,sd,skew,below_min_size\n");
        for s in Sector::ALL {
            let d = conditioned_distribution(
                &table,
                &Condition::All,
                s,
                1,
                MIN_GROUP_SIZE,
                self.cfg.allow_small_groups,
            );
            let sm = d.summary;
            let _ = writeln!(
                dist,
                "{},1,{},{},{},{},{}",
                s.name(),
                d.values.len(),
                fmt_opt(sm.map(|x| x.mean)),
                fmt_opt(sm.map(|x| x.sd).filter(|v| v.is_finite())),
                fmt_opt(sm.and_then(|x| x.skew)),
                u8::from(d.below_min_size)
            );
        }
        let cond = self.cond.clone();
        self.emit(&mut st, &format!("composite_{cond}.csv"), &composites_to_csv(&cells))?;
        self.emit(&mut st, &format!("distribution_{cond}.csv"), &dist)?;
        self.finish(st)
    }

    /// Two-way fixed-effects fits, one per configured sector.
    pub fn fe(&mut self) -> Result<(), CliError> {
        let mut st = self.begin("fe".into(), "fe");
        let incidents = self.load_incidents(&mut st)?;
        let (panel, calendar) = self.load_employment(&mut st)?;
        let cov = self.load_covariates(&mut st, calendar)?;
        let own = self.cfg.ownership()?;
        for s in self.cfg.sector_list(&self.cfg.sectors)? {
            let design = PanelDesign::from_panel(&panel, own, s, &incidents, &cov).map_err(st.err())?;
            let fit = fit_fixed_effects(&design).map_err(st.err())?;
            st.count(format!("{}_n_obs", s.name()), fit.n_obs);
            self.emit(&mut st, &sector_file("fe", s), &fit_to_csv(&fit))?;
        }
        self.finish(st)
    }

    /// Event-study difference-in-differences, one per configured sector.
    pub fn did(&mut self) -> Result<(), CliError> {
        let mut st = self.begin("did".into(), "did");
        let incidents = self.load_incidents(&mut st)?;
        let (panel, calendar) = self.load_employment(&mut st)?;
        let cov = self.load_covariates(&mut st, calendar)?;
        let own = self.cfg.ownership()?;
        let params = DidParams {
            pre: self.cfg.did_pre,
            post: self.cfg.did_post,
            n_boot: self.cfg.bootstrap_resamples,
            seed: self.cfg.seed,
            confidence: self.cfg.did_confidence,
            adjust: self.cfg.did_adjust,
        };
        for s in self.cfg.sector_list(&self.cfg.sectors)? {
            let op =
                OutcomePanel::from_employment(&panel, own, s, &incidents, Some(&cov), calendar).map_err(st.err())?;
            let res = did_event_study(&op, &params).map_err(st.err())?;
            st.count(format!("{}_treated", s.name()), res.n_treated);
            st.count(format!("{}_control", s.name()), res.n_control);
            self.emit(&mut st, &sector_file("did", s), &did_to_csv(&res))?;
        }
        self.finish(st)
    }

    /// PCA of standardized event features and extreme-score composites.
    pub fn pca(&mut self) -> Result<(), CliError> {
        let mut st = self.begin(format!("pca:{}", self.cond), "pca");
        st.rec.cond = Some(self.cond.clone());
        let rows = self.load_events(&mut st)?;
        let names: Vec<String> = DEFAULT_PCA_FEATURES.iter().map(|s| s.to_string()).collect();
        let fm = FeatureMatrix::from_rows(&rows, &names).map_err(st.err())?;
        st.count("rows_complete", fm.x.nrows());
        st.count("rows_missing_features", fm.n_missing);
        let z = standardize(&fm.x, &fm.names).map_err(st.err())?;
        st.count("features_dropped_constant", z.dropped.len());
        let model = fit_pca(&z).map_err(st.err())?;
        let n_pc = self.cfg.pca_composite_components.min(model.n_components());
        let groups = (0..n_pc)
            .map(|pc| {
                extreme_composites(
                    &model,
                    &fm,
                    &rows,
                    pc,
                    self.cfg.pca_low_quantile,
                    self.cfg.pca_high_quantile,
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(st.err())?;
        let cond = self.cond.clone();
        self.emit(&mut st, &format!("pca_loadings_{cond}.csv"), &loadings_to_csv(&model))?;
        self.emit(&mut st, &format!("pca_variance_{cond}.csv"), &variance_to_csv(&model))?;
        self.emit(
            &mut st,
            &format!("pca_composites_{cond}.csv"),
            &patterns::composites_to_csv(&groups),
        )?;
        self.emit(
            &mut st,
            &format!("pca_membership_{cond}.csv"),
            &membership_to_csv(&groups, &rows),
        )?;
        self.finish(st)
    }

    fn model_file(&self, s: Sector, kind: &str) -> String {
        format!("model_{}_{}_{kind}.txt", self.cond, s.name())
    }

    /// Temporal k-fold comparison of MLR and random forest, plus models
    /// trained on the full selection for scenario scoring.
    pub fn predict(&mut self) -> Result<(), CliError> {
        let mut st = self.begin(format!("predict:{}", self.cond), "predict");
        st.rec.cond = Some(self.cond.clone());
        let rows = self.load_events(&mut st)?;
        let kinds = [ModelKind::Mlr, ModelKind::Forest(self.cfg.forest_params())];
        let cond = self.cond.clone();
        for s in self.cfg.sector_list(&self.cfg.predict_sectors)? {
            let ds = Dataset::from_rows(&rows, &FeatureSpec::default_for(s)).map_err(st.err())?;
            st.count(format!("{}_n", s.name()), ds.len());
            st.count(format!("{}_rows_missing", s.name()), ds.n_missing);
            let report = cross_validate(&ds, &kinds, self.cfg.k_folds).map_err(st.err())?;
            self.emit(&mut st, &format!("cv_{cond}_{}.csv", s.name()), &cv_to_csv(&report))?;
            if let Some(imp) = feature_importance(&report) {
                self.emit(
                    &mut st,
                    &format!("importance_{cond}_{}.csv", s.name()),
                    &importance_to_csv(&imp),
                )?;
            }
            for kind in &kinds {
                let model = Predictor::train(&ds, kind).map_err(st.err())?;
                self.emit(&mut st, &self.model_file(s, kind.name()), &model.to_text())?;
            }
        }
        self.finish(st)
    }

    /// Predictions with wind and precipitation scaled by the scenario factors.
    pub fn scenario(&mut self) -> Result<(), CliError> {
        let mut st = self.begin(format!("scenario:{}", self.cond), "scenario");
        st.rec.cond = Some(self.cond.clone());
        let rows = self.load_events(&mut st)?;
        let (wf, pf) = (self.cfg.wind_factor, self.cfg.precip_factor);
        let cond = self.cond.clone();
        let kind = self.cfg.scenario_model.clone();
        for s in self.cfg.sector_list(&self.cfg.predict_sectors)? {
            let path = self.use_artifact(&mut st, &self.model_file(s, &kind))?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            let model = Predictor::from_text(&text).map_err(st.err())?;
            let ds = Dataset::from_rows(&rows, &model.spec).map_err(st.err())?;
            let res = scenario_predict(&model, &ds.x, wf, pf, HistogramSpec::default()).map_err(st.err())?;
            let ids: Vec<(String, String)> = ds
                .row_index
                .iter()
                .map(|&i| (rows[i].incident.storm_id.clone(), rows[i].incident.entity_id.clone()))
                .collect();
            let stem = format!("scenario_{cond}_{}", s.name());
            self.emit(&mut st, &format!("{stem}_summary.csv"), &scenario_summary_to_csv(&res))?;
            self.emit(
                &mut st,
                &format!("{stem}_histogram.csv"),
                &scenario_histogram_to_csv(&res),
            )?;
            self.emit(
                &mut st,
                &format!("{stem}_distribution.csv"),
                &scenario_distribution_to_csv(&res, &ids),
            )?;
            st.count(format!("{}_n", s.name()), ids.len());
        }
        self.finish(st)
    }

    /// Every stage in order.
    pub fn run_all(&mut self) -> Result<(), CliError> {
        self.link()?;
        self.table()?;
        self.composite()?;
        self.fe()?;
        self.did()?;
        self.pca()?;
        self.predict()?;
        self.scenario()
    }
}
