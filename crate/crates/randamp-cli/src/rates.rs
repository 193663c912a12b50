//! The `rates` subcommand: CSV emitters for the published tables and curves.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use randamp::certificate::format_sig12;
use randamp::entropy::{
    default_calibrated_v, efficiency, max_sv_solver, Accounting, TwoSourceExtractor,
};
use randamp::error::Error;

use crate::Failure;

#[derive(Args)]
pub struct RatesArgs {
    /// Maximum amplifiable eps_SV per machine, extractor and accounting mode
    #[arg(long, conflicts_with_all = ["fig4", "fig5", "fig7", "fig8"])]
    table1: bool,
    /// Efficiency versus round count
    #[arg(long, conflicts_with_all = ["fig5", "fig7", "fig8"])]
    fig4: bool,
    /// Efficiency versus observed Mermin value
    #[arg(long, conflicts_with_all = ["fig7", "fig8"])]
    fig5: bool,
    /// Maximum amplifiable eps_SV versus observed Mermin value
    #[arg(long, conflicts_with = "fig8")]
    fig7: bool,
    /// Certified per-bit rate c versus observed Mermin value
    #[arg(long)]
    fig8: bool,
    /// Source bias for the efficiency curves
    #[arg(long, default_value_t = 0.05)]
    eps_sv: f64,
    /// Security parameter
    #[arg(long, default_value_t = 1e-7)]
    eps_sec: f64,
    /// Confidence width for finite-size curves
    #[arg(long, default_value_t = 1e-2)]
    delta_f: f64,
    /// Memory-attack penalty coefficient; defaults to the calibrated value
    #[arg(long)]
    v_coeff: Option<f64>,
    /// Mermin grid for the *-versus-M_obs curves
    #[arg(long, default_value_t = 2.5)]
    m_min: f64,
    #[arg(long, default_value_t = 4.0)]
    m_max: f64,
    #[arg(long, default_value_t = 0.01)]
    m_step: f64,
    /// Write the CSV here instead of stdout
    #[arg(short, long)]
    output: Option<PathBuf>,
}

struct Csv {
    out: Box<dyn Write>,
}

impl Csv {
    fn open(path: &Option<PathBuf>) -> Result<Csv, Failure> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(std::fs::File::create(p).map_err(Error::from)?),
            None => Box::new(std::io::stdout()),
        };
        Ok(Csv { out })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), Failure> {
        match writeln!(self.out, "{}", fields.join(",")) {
            Ok(()) => Ok(()),
            // a consumer like `head` closing the pipe is not an error
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
            Err(e) => Err(Failure::io(e.to_string())),
        }
    }
}

fn f(x: f64) -> String {
    format_sig12(x)
}

pub fn rates(args: RatesArgs) -> Result<(), Failure> {
    let count =
        [args.table1, args.fig4, args.fig5, args.fig7, args.fig8].iter().filter(|b| **b).count();
    if count != 1 {
        return Err(Failure::usage(
            "pick exactly one of --table1, --fig4, --fig5, --fig7, --fig8",
        ));
    }
    if !(args.m_step > 0.0) || args.m_max < args.m_min {
        return Err(Failure::usage("need m_min <= m_max and m_step > 0"));
    }
    let v = args.v_coeff.unwrap_or_else(default_calibrated_v);
    let mut csv = Csv::open(&args.output)?;
    if args.table1 {
        table1(&mut csv, v, args.eps_sec)
    } else if args.fig4 {
        fig4(&mut csv, &args, v)
    } else if args.fig5 {
        fig5(&mut csv, &args, v)
    } else if args.fig7 {
        fig7(&mut csv, &args)
    } else {
        fig8(&mut csv, &args, v)
    }
}

fn m_grid(args: &RatesArgs) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut m = args.m_min;
    while m <= args.m_max + 1e-12 {
        grid.push(m.min(4.0));
        m += args.m_step;
    }
    grid
}

/// The published operating points: the maximum amplifiable bias per machine,
/// extractor and accounting mode, at `Delta_f = 1e-3`.
fn table1(csv: &mut Csv, v: f64, eps_sec: f64) -> Result<(), Failure> {
    const DELTA_F: f64 = 1e-3;
    csv.row(&["machine,m_obs,extractor,mode,n,v_coeff,eps_sv_max".to_string()])?;
    for (machine, m_obs) in [("ourense", 3.35f64), ("valencia", 3.11f64)] {
        for (ext, ext_name) in
            [(TwoSourceExtractor::Dodis, "dodis"), (TwoSourceExtractor::Raz, "raz")]
        {
            let iid = max_sv_solver(m_obs, DELTA_F, ext, &Accounting::IidAsymptotic, eps_sec)?;
            csv.row(&[format!("{machine},{},{ext_name},iid,inf,,{}", f(m_obs), f(iid))])?;
            for n_rounds in [10_000_000u64, 100_000_000] {
                let acc = Accounting::Mbqa { v, n_rounds };
                let got = max_sv_solver(m_obs, DELTA_F, ext, &acc, eps_sec)?;
                csv.row(&[format!(
                    "{machine},{},{ext_name},mbqa,{n_rounds},{},{}",
                    f(m_obs),
                    f(v),
                    f(got)
                )])?;
            }
        }
    }
    Ok(())
}

/// Efficiency as a function of the number of rounds, IID and MBQA.
fn fig4(csv: &mut Csv, args: &RatesArgs, v: f64) -> Result<(), Failure> {
    csv.row(&["m_obs,eps_sv,n,mode,extractor,eta".to_string()])?;
    let rounds = [
        100_000u64, 300_000, 1_000_000, 3_000_000, 10_000_000, 30_000_000, 100_000_000,
        300_000_000, 1_000_000_000,
    ];
    for m_obs in [3.35f64, 3.8] {
        for n_rounds in rounds {
            for (mode_name, acc) in [
                ("iid", Accounting::Iid { n_rounds }),
                ("mbqa", Accounting::Mbqa { v, n_rounds }),
            ] {
                let report = efficiency(
                    m_obs,
                    args.eps_sv,
                    args.delta_f,
                    args.eps_sec,
                    TwoSourceExtractor::Dodis,
                    &acc,
                )?;
                csv.row(&[format!(
                    "{},{},{n_rounds},{mode_name},dodis,{}",
                    f(m_obs),
                    f(args.eps_sv),
                    f(report.eta)
                )])?;
            }
        }
    }
    Ok(())
}

/// Efficiency as a function of the observed Mermin value, for several source
/// qualities: finite-size MBQA curves plus the asymptotic IID limit.
fn fig5(csv: &mut Csv, args: &RatesArgs, v: f64) -> Result<(), Failure> {
    csv.row(&["m_obs,eps_sv,n,mode,extractor,eta".to_string()])?;
    let biases = [0.0, 0.01, 0.05, 0.1];
    for m_obs in m_grid(args) {
        for eps_sv in biases {
            for n_rounds in [10_000_000u64, 100_000_000] {
                let report = efficiency(
                    m_obs,
                    eps_sv,
                    args.delta_f,
                    args.eps_sec,
                    TwoSourceExtractor::Dodis,
                    &Accounting::Mbqa { v, n_rounds },
                )?;
                csv.row(&[format!(
                    "{},{},{n_rounds},mbqa,dodis,{}",
                    f(m_obs),
                    f(eps_sv),
                    f(report.eta)
                )])?;
            }
            let report = efficiency(
                m_obs,
                eps_sv,
                0.0,
                args.eps_sec,
                TwoSourceExtractor::Dodis,
                &Accounting::IidAsymptotic,
            )?;
            csv.row(&[format!("{},{},inf,iid,dodis,{}", f(m_obs), f(eps_sv), f(report.eta))])?;
        }
    }
    Ok(())
}

/// Maximum amplifiable bias versus the observed Mermin value; the Raz curve
/// is flat at `2^(-1/2) - 1/2` once its hard cap binds.
fn fig7(csv: &mut Csv, args: &RatesArgs) -> Result<(), Failure> {
    const DELTA_F: f64 = 1e-3;
    csv.row(&["m_obs,delta_f,mode,extractor,eps_sv_max".to_string()])?;
    for m_obs in m_grid(args) {
        for (ext, name) in [(TwoSourceExtractor::Dodis, "dodis"), (TwoSourceExtractor::Raz, "raz")]
        {
            let got = max_sv_solver(m_obs, DELTA_F, ext, &Accounting::IidAsymptotic, args.eps_sec)?;
            csv.row(&[format!("{},{},iid,{name},{}", f(m_obs), f(DELTA_F), f(got))])?;
        }
    }
    Ok(())
}

/// Certified per-bit randomness rate `c = -log2(p_Q[n]) / 2n` versus the
/// observed Mermin value.
fn fig8(csv: &mut Csv, args: &RatesArgs, v: f64) -> Result<(), Failure> {
    csv.row(&["m_obs,eps_sv,n,mode,c".to_string()])?;
    let biases = [0.0, 0.01, 0.05, 0.1];
    for m_obs in m_grid(args) {
        for eps_sv in biases {
            let report = efficiency(
                m_obs,
                eps_sv,
                args.delta_f,
                args.eps_sec,
                TwoSourceExtractor::Dodis,
                &Accounting::Mbqa { v, n_rounds: 10_000_000 },
            )?;
            csv.row(&[format!("{},{},10000000,mbqa,{}", f(m_obs), f(eps_sv), f(report.c_q))])?;
            let report = efficiency(
                m_obs,
                eps_sv,
                0.0,
                args.eps_sec,
                TwoSourceExtractor::Dodis,
                &Accounting::IidAsymptotic,
            )?;
            csv.row(&[format!("{},{},inf,iid,{}", f(m_obs), f(eps_sv), f(report.c_q))])?;
        }
    }
    Ok(())
}
