use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dirtycap::bc::{self, BcCards};
use dirtycap::binningsim::{self, BinningDesign, SimConfig, MAX_SIM_ALPHABET};
use dirtycap::channels::{BcStateChannel, Condition12, MacStateChannel, MoreCapable, RelayStateChannel, StateChannel};
use dirtycap::mac::{self, MacCards};
use dirtycap::optimizer::{SearchBudget, Sweep};
use dirtycap::regions::RateRegion;
use dirtycap::relay::{self, GaussianRelayParams, RelayCards, Term2Variant};
use dirtycap::singleuser;
use dirtycap::specfile::{load_spec, ChannelSpec};

/// Capacity regions and rates for channels with state known at the encoder.
#[derive(Parser)]
#[command(name = "dirtycap", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// Grid resolution of the input-law search.
    #[arg(long, global = true)]
    grid_k: Option<usize>,
    /// Random restarts when the grid is too large.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Coordinate refinement passes per start.
    #[arg(long, global = true)]
    refine_passes: Option<usize>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    card_u: Option<usize>,
    #[arg(long, global = true)]
    card_v: Option<usize>,
    #[arg(long, global = true)]
    card_w: Option<usize>,
    /// Relay auxiliary `Ur`.
    #[arg(long, global = true)]
    card_ur: Option<usize>,
    /// Tolerance for inclusion and ordering checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// CSV output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the convex hull (`on`) or every searched polytope (`off`).
    #[arg(long, global = true, value_enum, default_value_t = OnOff::On)]
    convexify: OnOff,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print alphabets and structural properties of a channel.
    Info { spec: PathBuf },
    /// Capacity formulas of a single-user channel.
    Capacity {
        #[arg(value_enum)]
        kind: CapacityKind,
        spec: PathBuf,
    },
    /// Rate region of a MAC or BC.
    Region {
        #[arg(value_enum)]
        kind: RegionKind,
        spec: PathBuf,
        #[arg(long, default_value = "inner")]
        bound: String,
    },
    /// Common-message rates of the BC schemes.
    Compare {
        #[arg(value_enum)]
        kind: CompareKind,
        spec: PathBuf,
        #[arg(long, value_enum)]
        against: Against,
    },
    /// Relay channel rates.
    Relay {
        #[command(subcommand)]
        cmd: RelayCmd,
    },
    /// Monte Carlo simulations.
    Simulate {
        #[command(subcommand)]
        cmd: SimCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CapacityKind {
    Single,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionKind {
    Mac,
    Bc,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareKind {
    Bc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Against {
    Ss,
    Negc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Term2 {
    Verbatim,
    Conditional,
}

#[derive(Subcommand)]
enum RelayCmd {
    /// Degraded Gaussian relay with additive interference.
    Gaussian {
        #[arg(long = "P")]
        p: f64,
        #[arg(long = "Pr")]
        p_r: f64,
        #[arg(long = "Nr")]
        n_r: f64,
        #[arg(long = "Nd")]
        n_d: f64,
        #[arg(long = "Psr", default_value_t = 0.0)]
        p_sr: f64,
        #[arg(long = "Psd", default_value_t = 0.0)]
        p_sd: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        rho: f64,
        /// Write `alpha,term1,term2,min` rows here.
        #[arg(long)]
        alpha_sweep: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Partial decode-forward rate, single state.
    Pdf {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Term2::Verbatim)]
        term2: Term2,
    },
    /// Decode-forward rate, relay sees `S1` only.
    Df { spec: PathBuf },
}

#[derive(Subcommand)]
enum SimCmd {
    /// Random binning on a single-user channel, design from the capacity search.
    Binning {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        rate: f64,
        /// Bin excess rate; defaults to `I(U;S) + 3 eps`.
        #[arg(long)]
        excess: Option<f64>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Typicality slack.
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

/// Failure while loading a spec file; maps to exit code 2.
#[derive(Debug)]
struct SpecFailure(String);

impl std::fmt::Display for SpecFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SpecFailure {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<SpecFailure>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn budget(o: &Opts) -> SearchBudget {
    let d = SearchBudget::default();
    SearchBudget {
        grid_k: o.grid_k.unwrap_or(d.grid_k),
        restarts: o.restarts.unwrap_or(d.restarts),
        refine_passes: o.refine_passes.unwrap_or(d.refine_passes),
        seed: o.seed,
        grid_cap: d.grid_cap,
    }
}

fn load(path: &Path) -> anyhow::Result<ChannelSpec> {
    load_spec(path).map_err(|e| SpecFailure(format!("{}: {e}", path.display())).into())
}

fn single(path: &Path) -> anyhow::Result<StateChannel> {
    match load(path)? {
        ChannelSpec::Single(c) => Ok(c),
        other => bail!("expected a single-user channel, found kind `{}`", other.kind()),
    }
}

fn mac_channel(path: &Path) -> anyhow::Result<MacStateChannel> {
    match load(path)? {
        ChannelSpec::Mac(c) => Ok(c),
        other => bail!("expected a MAC, found kind `{}`", other.kind()),
    }
}

fn bc_channel(path: &Path) -> anyhow::Result<BcStateChannel> {
    match load(path)? {
        ChannelSpec::Bc(c) => Ok(c),
        other => bail!("expected a BC, found kind `{}`", other.kind()),
    }
}

fn relay_channel(path: &Path) -> anyhow::Result<RelayStateChannel> {
    match load(path)? {
        ChannelSpec::Relay(c) => Ok(c),
        other => bail!("expected a relay channel, found kind `{}`", other.kind()),
    }
}

fn csv_out(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let o = &cli.opts;
    let b = budget(o);
    b.validate()?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "# budget {b}")?;
    match &cli.cmd {
        Cmd::Info { spec } => info(&mut w, &load(spec)?, &b),
        Cmd::Capacity { kind: CapacityKind::Single, spec } => capacity(&mut w, &single(spec)?, &b, o),
        Cmd::Region { kind, spec, bound } => {
            let sweep = match kind {
                RegionKind::Mac => mac_region(&mac_channel(spec)?, bound, &b, o)?,
                RegionKind::Bc => bc_region(&bc_channel(spec)?, bound, &b, o)?,
            };
            report_region(&mut w, &sweep, o)
        }
        Cmd::Compare { kind: CompareKind::Bc, spec, against } => compare(&mut w, &bc_channel(spec)?, *against, &b, o),
        Cmd::Relay { cmd } => relay_cmd(&mut w, cmd, &b, o),
        Cmd::Simulate { cmd: SimCmd::Binning { channel, rate, excess, n, trials, epsilon } } => {
            let ch = single(channel)?;
            let card_u = o.card_u.unwrap_or_else(|| singleuser::default_card_u(&ch).min(MAX_SIM_ALPHABET));
            let gp = singleuser::gp_capacity(&ch, &b, Some(card_u))?;
            let design = BinningDesign::from_candidate(&ch, &gp.argmax)?;
            let cfg = SimConfig {
                rate: *rate,
                excess: *excess,
                n: *n,
                trials: *trials,
                seed: o.seed,
                epsilon: *epsilon,
            };
            let r = binningsim::simulate(&ch, &design, &cfg)?;
            writeln!(
                w,
                "gp={:.6} I(U;S)={:.6} I(U;Y)={:.6} card_u={card_u}",
                gp.bits,
                design.info_us(),
                design.info_uy()
            )?;
            writeln!(
                w,
                "rate={rate} excess={:.6} epsilon={:.6} n={n} trials={} backend={:?} block_error_rate={:.6} encode_failure_rate={:.6}",
                r.excess, r.epsilon, r.trials, r.backend, r.block_error_rate, r.encode_failure_rate
            )?;
            let rows = |mut out: Box<dyn Write + '_>| -> io::Result<()> {
                writeln!(out, "batch,trials,errors,encode_failures")?;
                for s in &r.batches {
                    writeln!(out, "{},{},{},{}", s.batch, s.trials, s.errors, s.encode_failures)?;
                }
                out.flush()
            };
            match &o.out {
                Some(p) => rows(Box::new(csv_out(p)?))?,
                None => rows(Box::new(&mut w))?,
            }
            Ok(())
        }
    }
}

fn info(w: &mut impl Write, spec: &ChannelSpec, b: &SearchBudget) -> anyhow::Result<()> {
    writeln!(w, "kind={}", spec.kind())?;
    match spec {
        ChannelSpec::Single(c) => {
            writeln!(w, "|X|={} |S|={} |Y|={}", c.x_size(), c.s_size(), c.y_size())?;
            writeln!(w, "deterministic={}", c.is_deterministic().is_some())?;
        }
        ChannelSpec::Mac(c) => {
            writeln!(
                w,
                "|X1|={} |X2|={} |S1|={} |S2|={} |Y|={}",
                c.x1_size(),
                c.x2_size(),
                c.s1_size(),
                c.s2_size(),
                c.output().size()
            )?;
            writeln!(w, "deterministic={}", c.is_deterministic())?;
            writeln!(w, "states_independent={}", c.states_independent())?;
            writeln!(w, "orthogonal={}", c.is_orthogonal()?.is_some())?;
        }
        ChannelSpec::Bc(c) => {
            writeln!(w, "|X|={} |S|={} |Y1|={} |Y2|={}", c.x_size(), c.s_size(), c.y1_size(), c.y2_size())?;
            let (d1, d2) = (c.det1().is_some(), c.det2().is_some());
            writeln!(w, "deterministic={} y1_deterministic={d1} y2_deterministic={d2}", d1 && d2)?;
            writeln!(w, "degraded={}", c.is_degraded().is_some())?;
            match c.is_more_capable(b.grid_k, b.restarts, b.seed) {
                MoreCapable::ProbablyTrue => writeln!(w, "more_capable=probably_true")?,
                MoreCapable::CertifiedFalse { gap, .. } => writeln!(w, "more_capable=certified_false gap={gap:.6e}")?,
            }
            if d1 && d2 {
                match c.check_condition_12(b.grid_k, b.restarts, b.seed) {
                    Condition12::Holds => writeln!(w, "condition_12=holds")?,
                    Condition12::SampledOnly => writeln!(w, "condition_12=sampled_only")?,
                    Condition12::Fails { value, .. } => writeln!(w, "condition_12=fails value={value:.6e}")?,
                }
            }
        }
        ChannelSpec::Relay(c) => {
            writeln!(
                w,
                "|X|={} |Xr|={} |S1|={} |S2|={} |Y|={} |Yr|={}",
                c.x_size(),
                c.xr_size(),
                c.s1_size(),
                c.s2_size(),
                c.y_size(),
                c.yr_size()
            )?;
        }
    }
    Ok(())
}

fn capacity(w: &mut impl Write, ch: &StateChannel, b: &SearchBudget, o: &Opts) -> anyhow::Result<()> {
    let gp = singleuser::gp_capacity(ch, b, o.card_u)?;
    let csirt = singleuser::csirt_capacity(ch);
    write!(w, "gp={:.6} csirt={:.6}", gp.bits, csirt.bits)?;
    if let Ok(det) = singleuser::det_capacity(ch) {
        write!(w, " det={det:.6}")?;
    }
    writeln!(w)?;
    writeln!(
        w,
        "search evaluated={} exhaustive={}",
        gp.search.evaluated, gp.search.exhaustive
    )?;
    Ok(())
}

fn mac_region(ch: &MacStateChannel, bound: &str, b: &SearchBudget, o: &Opts) -> anyhow::Result<Sweep> {
    let cards = match (o.card_v, o.card_u) {
        (None, None) => None,
        (v, u) => {
            let d = MacCards::default_for(ch);
            Some(MacCards {
                v1: v.unwrap_or(d.v1),
                v2: u.or(v).unwrap_or(d.v2),
            })
        }
    };
    let closed = |region: RateRegion| Sweep {
        region,
        witnesses: Vec::new(),
        visited: 0,
        skipped: 0,
    };
    Ok(match bound {
        "inner" => mac::mac_inner_region(ch, b, cards)?,
        "outer" => mac::mac_outer_region(ch, b, cards)?,
        "outer-weak" => mac::mac_outer_weak_region(ch, b, cards)?,
        "orth" => closed(mac::orth_mac_capacity(ch, b, cards)?.region),
        "det-orth" => closed(mac::det_orth_mac_capacity(ch)?),
        other => bail!("unknown MAC bound `{other}` (expected inner, outer, outer-weak, orth or det-orth)"),
    })
}

fn bc_region(ch: &BcStateChannel, bound: &str, b: &SearchBudget, o: &Opts) -> anyhow::Result<Sweep> {
    let d = BcCards::default_for(ch);
    let any = o.card_u.is_some() || o.card_v.is_some() || o.card_w.is_some();
    let cards = any.then(|| BcCards {
        w: o.card_w.unwrap_or(d.w),
        v: o.card_v.unwrap_or(d.v),
        u: o.card_u.unwrap_or(d.u),
    });
    let vu = (o.card_v.is_some() || o.card_u.is_some()).then(|| (o.card_v.unwrap_or(d.v), o.card_u.unwrap_or(d.u)));
    Ok(match bound {
        "inner" => bc::bc_inner_region(ch, b, cards, &[])?,
        "outer" => bc::bc_outer_region(ch, b, vu, &[])?,
        "det" => bc::det_bc_capacity(ch, b)?,
        "det-common" => bc::det_bc_common_capacity(ch, b)?,
        "semidet" => bc::semidet_bc_capacity(ch, b, o.card_u)?,
        "more-capable" => bc::more_capable_capacity(ch, b, o.card_u)?,
        "degraded-det" => bc::degraded_det_capacity(ch, b, o.card_u)?,
        other => bail!(
            "unknown BC bound `{other}` (expected inner, outer, det, det-common, semidet, more-capable or degraded-det)"
        ),
    })
}

fn report_region(w: &mut impl Write, sweep: &Sweep, o: &Opts) -> anyhow::Result<()> {
    let r = &sweep.region;
    let names: &[&str] = if r.dim() == 3 { &["R0", "R1", "R2"] } else { &["R1", "R2"] };
    writeln!(
        w,
        "corners={} members={} visited={} skipped={}",
        r.corners().len(),
        r.members().len(),
        sweep.visited,
        sweep.skipped
    )?;
    for c in r.corners() {
        let parts: Vec<String> = names.iter().zip(c.coords()).map(|(n, v)| format!("{n}={v:.6}")).collect();
        writeln!(w, "corner {}", parts.join(" "))?;
    }
    for (k, n) in names.iter().enumerate() {
        writeln!(w, "max {n}={:.6}", r.max_coordinate(k))?;
    }
    if let Some(p) = &o.out {
        let mut f = csv_out(p)?;
        match o.convexify {
            OnOff::On => r.write_corners_csv(&mut f)?,
            OnOff::Off => r.write_raw_csv(&mut f)?,
        }
        f.flush()?;
    }
    Ok(())
}

fn compare(w: &mut impl Write, ch: &BcStateChannel, against: Against, b: &SearchBudget, o: &Opts) -> anyhow::Result<()> {
    let d = BcCards::default_for(ch);
    let cards = BcCards {
        w: o.card_w.unwrap_or(d.w),
        v: o.card_v.unwrap_or(d.v),
        u: o.card_u.unwrap_or(d.u),
    };
    let r = bc::common_rates(ch, b, cards)?;
    let ours = r.ours.value.max(0.0);
    match against {
        Against::Ss => {
            let ss = r.ss.value.max(0.0);
            writeln!(w, "ours={ours:.9} ss={ss:.9} ours>=ss={}", ours >= ss - o.tol)?;
        }
        Against::Negc => {
            let negc = r.negc.value.max(0.0);
            writeln!(w, "ours={ours:.9} negc={negc:.9} negc>=ours={}", negc >= ours - o.tol)?;
        }
    }
    Ok(())
}

fn relay_cmd(w: &mut impl Write, cmd: &RelayCmd, b: &SearchBudget, o: &Opts) -> anyhow::Result<()> {
    match cmd {
        RelayCmd::Gaussian { p, p_r, n_r, n_d, p_sr, p_sd, rho, alpha_sweep, steps } => {
            let params = GaussianRelayParams {
                p: *p,
                p_r: *p_r,
                n_r: *n_r,
                n_d: *n_d,
                p_sr: *p_sr,
                p_sd: *p_sd,
                rho: *rho,
            };
            let (bits, alpha) = relay::gaussian_rc_capacity(&params)?;
            writeln!(w, "capacity={bits:.9} alpha={alpha:.8}")?;
            if *p_r > 0.0 {
                let t = relay::theorem8_rate(&params, alpha)?;
                writeln!(
                    w,
                    "at alpha: term1={:.9} term2={:.9} min={:.9} singular={}",
                    t.term1, t.term2, t.bits, t.singular
                )?;
            }
            if let Some(path) = alpha_sweep {
                let rows = relay::alpha_sweep(&params, *steps)?;
                let mut f = csv_out(path)?;
                writeln!(f, "alpha,term1,term2,min")?;
                for r in rows {
                    writeln!(f, "{:.6},{:.12},{:.12},{:.12}", r.alpha, r.term1, r.term2, r.min)?;
                }
                f.flush()?;
            }
        }
        RelayCmd::Pdf { spec, term2 } => {
            let ch = relay_channel(spec)?;
            let d = RelayCards::default_for(&ch);
            let cards = RelayCards {
                ur: o.card_ur.unwrap_or(d.ur),
                u: o.card_u.unwrap_or(d.u),
                v: o.card_v.unwrap_or(d.v),
            };
            let variant = match term2 {
                Term2::Verbatim => Term2Variant::Verbatim,
                Term2::Conditional => Term2Variant::Conditional,
            };
            let r = relay::pdf_relay_rate(&ch, b, Some(cards), variant, &[])?;
            writeln!(
                w,
                "pdf={:.9} feasible={} provisional={} term2={:?}",
                r.bits, r.feasible, r.provisional, r.variant
            )?;
        }
        RelayCmd::Df { spec } => {
            let ch = relay_channel(spec)?;
            let cards = match (o.card_ur, o.card_u) {
                (None, None) => None,
                (ur, u) => Some((
                    ur.unwrap_or(ch.xr_size() * ch.s1_size()),
                    u.unwrap_or(ch.x_size() * ch.s1_size() * ch.s2_size()),
                )),
            };
            let r = relay::df_relay_rate(&ch, b, cards)?;
            writeln!(w, "df={:.9}", r.bits)?;
        }
    }
    Ok(())
}
