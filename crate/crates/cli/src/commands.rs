use cvqkd_core::keyrate::{key_rate_at, variant_key_rate};
use cvqkd_core::protocols::physicality_parabola;
use cvqkd_core::region::{key_rate_vs_cp, key_rate_vs_loss, scan_region, tolerable_noise_vs_loss};
use cvqkd_core::{
    ChannelParams, Error, LossGrid, PQuadObservation, ProtocolConfig, QuadratureChannel,
    SearchSettings, Variant,
};
use rayon::prelude::*;

use crate::output::{format_number, Cell, Report, Table};
use crate::{
    ChannelArgs, Command, Failure, FigureArgs, KeyrateArgs, LossArgs, RegionArgs, SearchArgs,
    SweepCpArgs, SweepLossArgs, TolerableNoiseArgs,
};

type Config = Vec<(String, Cell)>;

fn kv(key: &str, value: impl Into<Cell>) -> (String, Cell) {
    (key.to_string(), value.into())
}

fn report(command: &str, table: Table) -> Report {
    Report {
        command: command.into(),
        config: Vec::new(),
        table,
        summary: Vec::new(),
        error: None,
    }
}

/// Figure 2 and 3 channel: 10 dB x-loss with 5% excess noise.
const FIG_ETA_X: f64 = 0.1;
const FIG_EPS_X: f64 = 0.05;
const FIG2_VPB_RANGE: (f64, f64) = (0.99, 1.02);
const FIG2_RESOLUTION: usize = 61;
const FIG3_VPB: [f64; 4] = [1.0, 1.003, 1.00535, 1.01];
const FIG3_RESOLUTION: usize = 2001;
const FIG45_EPS: f64 = 0.05;

/// Runs `command`; returns its name, the resolved-parameter echo and the
/// outcome.
pub(crate) fn execute(command: &Command) -> (&'static str, Config, Result<Report, Failure>) {
    match command {
        Command::Keyrate(a) => {
            let (config, out) = keyrate(a);
            ("keyrate", config, out)
        }
        Command::Region(a) => {
            let (config, out) = region(a);
            ("region", config, out)
        }
        Command::SweepLoss(a) => {
            let (config, out) = sweep_loss(a);
            ("sweep-loss", config, out)
        }
        Command::SweepCp(a) => {
            let (config, out) = sweep_cp(a);
            ("sweep-cp", config, out)
        }
        Command::TolerableNoise(a) => {
            let (config, out) = tolerable_noise(a);
            ("tolerable-noise", config, out)
        }
        Command::Figure(a) => {
            let (config, out) = figure(a);
            ("figure", config, out)
        }
    }
}

struct Resolved {
    vm: f64,
    eta_x: f64,
    eta_p: f64,
    eps_x: f64,
    eps_p: f64,
}

impl Resolved {
    fn new(c: &ChannelArgs) -> Self {
        Self {
            vm: c.vm,
            eta_x: c.eta_x,
            eta_p: c.eta_p.unwrap_or(c.eta_x),
            eps_x: c.eps_x,
            eps_p: c.eps_p.unwrap_or(c.eps_x),
        }
    }

    fn echo(&self) -> Config {
        vec![
            kv("vm", self.vm),
            kv("eta_x", self.eta_x),
            kv("eta_p", self.eta_p),
            kv("eps_x", self.eps_x),
            kv("eps_p", self.eps_p),
        ]
    }

    fn unmodulated_p_variance(&self) -> f64 {
        1.0 + self.eta_p * self.eps_p
    }

    fn channel(&self) -> Result<ChannelParams, Error> {
        ChannelParams::new(self.eta_x, self.eta_p, self.eps_x, self.eps_p)
    }
}

fn protocol(vm: f64, variant: Variant, beta: f64) -> Result<ProtocolConfig, Error> {
    ProtocolConfig::new(vm, variant)?.with_reconciliation_efficiency(beta)
}

fn settings(s: &SearchArgs) -> Result<SearchSettings, Error> {
    SearchSettings::with_grid_points(s.grid_points)
}

fn loss_grid(l: &LossArgs) -> Result<LossGrid, Error> {
    LossGrid::new(l.loss_db_min, l.loss_db_max, l.loss_db_step)
}

fn loss_echo(l: &LossArgs) -> Config {
    vec![
        kv("loss_db_min", l.loss_db_min),
        kv("loss_db_max", l.loss_db_max),
        kv("loss_db_step", l.loss_db_step),
    ]
}

/// Requested variants in first-seen order; all of them when none is given.
fn variant_list(requested: &[Variant]) -> Vec<Variant> {
    if requested.is_empty() {
        return Variant::ALL.to_vec();
    }
    let mut out = Vec::new();
    for &v in requested {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn variant_echo(variants: &[Variant]) -> Cell {
    Cell::Text(
        variants
            .iter()
            .map(Variant::as_str)
            .collect::<Vec<_>>()
            .join(","),
    )
}

fn keyrate(a: &KeyrateArgs) -> (Config, Result<Report, Failure>) {
    let r = Resolved::new(&a.channel);
    let vpb = a.vpb.unwrap_or_else(|| r.unmodulated_p_variance());
    let mut config = r.echo();
    config.extend([
        kv("vpb", vpb),
        kv("cp", a.cp),
        kv("variant", a.variant.as_str()),
        kv("beta", a.search.beta),
        kv("grid_points", a.search.grid_points),
    ]);
    let run = || -> Result<Report, Failure> {
        let channel = r.channel()?;
        let proto = protocol(r.vm, a.variant, a.search.beta)?;
        let s = settings(&a.search)?;
        let k = match (a.cp, a.variant) {
            (Some(_), Variant::Gg02) => {
                return Err(Failure::Invalid(
                    "--cp applies only to unidimensional variants".into(),
                ))
            }
            (Some(cp), _) => key_rate_at(&proto, &channel.x, &PQuadObservation::new(vpb, cp))?,
            (None, _) => variant_key_rate(&proto, &channel, vpb, &s)?,
        };
        let mut t = Table::new(["i_ab", "chi_be", "key_rate", "c_p_evaluated", "worst_case"]);
        t.push(vec![
            k.i_ab.into(),
            k.chi_be.into(),
            k.key_rate.into(),
            k.c_p_evaluated.into(),
            k.worst_case.into(),
        ]);
        Ok(report("keyrate", t))
    };
    (config, run())
}

fn region_report(
    proto: &ProtocolConfig,
    x: &QuadratureChannel,
    range: (f64, f64),
    resolution: usize,
    s: &SearchSettings,
    command: &str,
) -> Result<Report, Failure> {
    let map = scan_region(proto, x, range, resolution, s)?;
    let vertex = physicality_parabola(proto, x)?.v0;
    let mut t = Table::new([
        "v_p_b",
        "c_p_min",
        "c_p_max",
        "secure_for_all_c_p",
        "secure_intervals",
        "worst_case_c_p",
        "worst_case_key_rate",
    ]);
    for r in &map.records {
        let intervals = r
            .secure
            .iter()
            .map(|iv| format!("{}:{}", format_number(iv.lo), format_number(iv.hi)))
            .collect::<Vec<_>>()
            .join(";");
        t.push(vec![
            r.v_p_b.into(),
            r.c_lo.into(),
            r.c_hi.into(),
            r.secure_everywhere().into(),
            if intervals.is_empty() { Cell::Null } else { intervals.into() },
            r.worst_case_c_p.into(),
            r.worst_case_key_rate.into(),
        ]);
    }
    let mut rep = report(command, t);
    rep.summary = vec![kv("v_p_b_vertex", vertex), kv("v_p_b_max", map.v_p_b_max)];
    Ok(rep)
}

fn region(a: &RegionArgs) -> (Config, Result<Report, Failure>) {
    let r = Resolved::new(&a.channel);
    let mut config = r.echo();
    config.extend([
        kv("vpb_min", a.vpb_min),
        kv("vpb_max", a.vpb_max),
        kv("resolution", a.resolution),
        kv("beta", a.search.beta),
        kv("grid_points", a.search.grid_points),
    ]);
    let run = || -> Result<Report, Failure> {
        let x = r.channel()?.x;
        let proto = protocol(r.vm, Variant::UdPessimistic, a.search.beta)?;
        let s = settings(&a.search)?;
        let vertex = physicality_parabola(&proto, &x)?.v0;
        let range = (a.vpb_min.unwrap_or(vertex), a.vpb_max.unwrap_or(vertex + 0.03));
        region_report(&proto, &x, range, a.resolution, &s, "region")
    };
    (config, run())
}

fn cp_slices(
    proto: &ProtocolConfig,
    x: &QuadratureChannel,
    vpbs: &[f64],
    resolution: usize,
    command: &str,
) -> Result<Report, Failure> {
    let curves = vpbs
        .par_iter()
        .map(|&v| key_rate_vs_cp(proto, x, v, resolution))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(["v_p_b", "c_p", "key_rate"]);
    for (&v, curve) in vpbs.iter().zip(&curves) {
        for (&c, &k) in curve.abscissa.iter().zip(&curve.ordinate) {
            t.push(vec![v.into(), c.into(), k.into()]);
        }
    }
    Ok(report(command, t))
}

fn sweep_cp(a: &SweepCpArgs) -> (Config, Result<Report, Failure>) {
    let r = Resolved::new(&a.channel);
    let vpbs = if a.vpb.is_empty() {
        vec![r.unmodulated_p_variance()]
    } else {
        a.vpb.clone()
    };
    let mut config = r.echo();
    config.extend([
        kv(
            "vpb",
            vpbs.iter().map(|&v| format_number(v)).collect::<Vec<_>>().join(","),
        ),
        kv("resolution", a.resolution),
        kv("beta", a.beta),
    ]);
    let run = || -> Result<Report, Failure> {
        let x = r.channel()?.x;
        let proto = protocol(r.vm, Variant::UdPessimistic, a.beta)?;
        cp_slices(&proto, &x, &vpbs, a.resolution, "sweep-cp")
    };
    (config, run())
}

fn loss_report(
    proto: &ProtocolConfig,
    eps: f64,
    grid: &LossGrid,
    variants: &[Variant],
    s: &SearchSettings,
    command: &str,
) -> Result<Report, Failure> {
    let curves = key_rate_vs_loss(proto, eps, grid, variants, s)?;
    let mut t = Table::new(
        std::iter::once("loss_db".to_string())
            .chain(variants.iter().map(|v| format!("key_rate_{}", v.column_suffix()))),
    );
    for (i, &db) in grid.points().iter().enumerate() {
        let mut row = vec![Cell::Num(db)];
        row.extend(curves.iter().map(|c| Cell::Num(c.ordinate[i])));
        t.push(row);
    }
    Ok(report(command, t))
}

fn sweep_loss(a: &SweepLossArgs) -> (Config, Result<Report, Failure>) {
    let variants = variant_list(&a.variants);
    let mut config = vec![kv("vm", a.vm), kv("eps", a.eps_x), kv("variants", variant_echo(&variants))];
    config.extend(loss_echo(&a.loss));
    config.extend([kv("beta", a.search.beta), kv("grid_points", a.search.grid_points)]);
    let run = || -> Result<Report, Failure> {
        let proto = protocol(a.vm, variants[0], a.search.beta)?;
        let grid = loss_grid(&a.loss)?;
        let s = settings(&a.search)?;
        loss_report(&proto, a.eps_x, &grid, &variants, &s, "sweep-loss")
    };
    (config, run())
}

/// Tolerable-noise table; points without any key at zero noise read 0.
///
/// Fails with the first `NoPositiveRate` only when no point of any variant
/// has a key.
fn noise_report(
    proto: &ProtocolConfig,
    grid: &LossGrid,
    variants: &[Variant],
    s: &SearchSettings,
    command: &str,
) -> Result<Report, Failure> {
    let mut columns = Vec::new();
    let mut first_missing = None;
    let mut any_key = false;
    for &v in variants {
        let mut col = Vec::new();
        for p in tolerable_noise_vs_loss(&proto.with_variant(v), grid, s) {
            match p.eps_max {
                Ok(e) => {
                    any_key = true;
                    col.push(e);
                }
                Err(e @ Error::NoPositiveRate { .. }) => {
                    first_missing.get_or_insert(e);
                    col.push(0.0);
                }
                Err(e) => return Err(e.into()),
            }
        }
        columns.push(col);
    }
    if let (false, Some(e)) = (any_key, first_missing) {
        return Err(e.into());
    }
    let mut t = Table::new(
        std::iter::once("loss_db".to_string())
            .chain(variants.iter().map(|v| format!("eps_max_{}", v.column_suffix()))),
    );
    for (i, &db) in grid.points().iter().enumerate() {
        let mut row = vec![Cell::Num(db)];
        row.extend(columns.iter().map(|c| Cell::Num(c[i])));
        t.push(row);
    }
    Ok(report(command, t))
}

fn tolerable_noise(a: &TolerableNoiseArgs) -> (Config, Result<Report, Failure>) {
    let variants = variant_list(&a.variants);
    let mut config = vec![kv("vm", a.vm), kv("variants", variant_echo(&variants))];
    config.extend(loss_echo(&a.loss));
    config.extend([kv("beta", a.search.beta), kv("grid_points", a.search.grid_points)]);
    let run = || -> Result<Report, Failure> {
        let proto = protocol(a.vm, variants[0], a.search.beta)?;
        let grid = loss_grid(&a.loss)?;
        let s = settings(&a.search)?;
        noise_report(&proto, &grid, &variants, &s, "tolerable-noise")
    };
    (config, run())
}

fn figure(a: &FigureArgs) -> (Config, Result<Report, Failure>) {
    let vm = a.vm.unwrap_or(if a.id <= 3 { 10.0 } else { 100.0 });
    let mut config = vec![kv("id", a.id as usize), kv("vm", vm)];
    let full_loss = LossArgs {
        loss_db_min: 0.0,
        loss_db_max: 30.0,
        loss_db_step: 0.5,
    };
    match a.id {
        2 | 3 => config.extend([kv("eta_x", FIG_ETA_X), kv("eps_x", FIG_EPS_X)]),
        4 => config.push(kv("eps", FIG45_EPS)),
        _ => {}
    }
    match a.id {
        2 => config.extend([
            kv("vpb_min", FIG2_VPB_RANGE.0),
            kv("vpb_max", FIG2_VPB_RANGE.1),
            kv("resolution", FIG2_RESOLUTION),
        ]),
        3 => config.extend([
            kv(
                "vpb",
                FIG3_VPB.iter().map(|&v| format_number(v)).collect::<Vec<_>>().join(","),
            ),
            kv("resolution", FIG3_RESOLUTION),
        ]),
        _ => {
            config.push(kv("variants", variant_echo(&Variant::ALL)));
            config.extend(loss_echo(&full_loss));
        }
    }
    if a.id != 3 {
        config.push(kv("grid_points", a.grid_points));
    }
    let run = || -> Result<Report, Failure> {
        let s = SearchSettings::with_grid_points(a.grid_points)?;
        match a.id {
            2 | 3 => {
                let proto = ProtocolConfig::new(vm, Variant::UdPessimistic)?;
                let x = QuadratureChannel::new(FIG_ETA_X, FIG_EPS_X)?;
                if a.id == 2 {
                    region_report(&proto, &x, FIG2_VPB_RANGE, FIG2_RESOLUTION, &s, "figure")
                } else {
                    cp_slices(&proto, &x, &FIG3_VPB, FIG3_RESOLUTION, "figure")
                }
            }
            4 => {
                let proto = ProtocolConfig::new(vm, Variant::Gg02)?;
                loss_report(&proto, FIG45_EPS, &loss_grid(&full_loss)?, &Variant::ALL, &s, "figure")
            }
            _ => {
                let proto = ProtocolConfig::new(vm, Variant::Gg02)?;
                noise_report(&proto, &loss_grid(&full_loss)?, &Variant::ALL, &s, "figure")
            }
        }
    };
    (config, run())
}
