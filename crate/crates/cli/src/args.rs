use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "raytrap", version, about = "Rays, phases and decay outside two convex obstacles")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Scene file (JSON); the standard two-sphere scene when absent.
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    /// Output directory for JSON and CSV artifacts [env: RAYTRAP_OUT].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scene summary: gap, midpoint, escape radius, convexity margins.
    Scene,
    #[command(subcommand)]
    Billiard(BilliardCmd),
    #[command(name = "trapped-set", subcommand)]
    TrappedSet(TrappedCmd),
    /// Reflected phase of one story at one point.
    Phase(PhaseArgs),
    #[command(subcommand)]
    Amplitude(AmplitudeCmd),
    #[command(subcommand)]
    Parametrix(ParametrixCmd),
    #[command(subcommand)]
    Morawetz(MorawetzCmd),
    /// Run the acceptance criteria and print PASS/FAIL per criterion.
    Acceptance(AcceptanceArgs),
}

#[derive(Debug, Subcommand)]
pub enum BilliardCmd {
    /// Return map of the periodic orbit.
    ///
    /// CSV `monodromy`: row, c0, c1, c2, c3.
    Orbit {
        #[arg(long)]
        step: Option<f64>,
    },
    /// Billiard flow from one phase point.
    ///
    /// CSV `reflections`: index, body, x, y, z.
    Flow {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        x: [f64; 3],
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        xi: [f64; 3],
        #[arg(long)]
        t: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum TrappedCmd {
    /// Log-distance shrinkage of the trapped set in the axial slice.
    ///
    /// CSV `shrinkage`: t, distance, cells.
    Shrinkage {
        #[arg(long, default_value_t = 513)]
        resolution: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,2.5,3,3.5,4,4.5,5,5.5,6")]
        times: Vec<f64>,
    },
    /// Phase-space grid membership at time T.
    Grid {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 9)]
        axial: usize,
        #[arg(long, default_value_t = 9)]
        transverse: usize,
        #[arg(long, default_value_t = 24)]
        directions: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub x: [f64; 3],
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub xi: [f64; 3],
    /// Obstacle sequence such as `2,1,2,1`; `-` for none.
    #[arg(long)]
    pub story: String,
    /// Source point; the scene midpoint when absent.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub y: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value = "plus")]
    pub sign: SignArg,
}

#[derive(Debug, Subcommand)]
pub enum AmplitudeCmd {
    /// Summed leading amplitudes against time.
    ///
    /// CSV `decay`: t, sup_sum.
    Decay {
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long, default_value_t = 15.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.25)]
        dt: f64,
        #[arg(long, default_value_t = 10)]
        max_len: usize,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Convergence of the normalized curvature products.
    ///
    /// CSV `increments`: pattern, r, sup_increment.
    Convergence {
        #[arg(long, default_value_t = 10)]
        r_max: usize,
        /// Run the products in double-double.
        #[arg(long)]
        dd: bool,
    },
    /// Active-story counts against time.
    ///
    /// CSV `census`: t, window_count, cumulative_count, direct_count.
    Census {
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long, default_value_t = 40.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.25)]
        dt: f64,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ParametrixCmd {
    /// Free term `sup_x |S^0|` against time.
    ///
    /// CSV `free`: t, sup, sup_h2.
    Free {
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long, default_value_t = 2.0)]
        t_start: f64,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
    },
    /// Reflected sum against time, with the story-budget doubling check.
    ///
    /// CSV `decay`: t, reflected, reflected_h2, combined_normalized, doubled.
    Decay {
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value_t = 12)]
        samples: usize,
        #[arg(long)]
        k: Option<u32>,
        /// Skip the doubled-budget run.
        #[arg(long)]
        no_doubling: bool,
    },
    /// Remainder budget for K terms.
    Budget {
        #[arg(long, default_value_t = 0.05)]
        h: f64,
        #[arg(long, default_value_t = 26)]
        k: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightKind {
    TwoCenter,
    Gauge,
}

#[derive(Debug, Subcommand)]
pub enum MorawetzCmd {
    /// Certificate for a weight: derivative checks, signs, boundary flux.
    Report {
        #[arg(long, value_enum, default_value = "two-center")]
        weight: WeightKind,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "4,0,0")]
        c: [f64; 3],
        /// Radius of the sampled ball.
        #[arg(long = "A", default_value_t = 6.0)]
        a: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Gauge weight: derivative checks, bilaplacian verdict, illumination.
    Gauge {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Polynomials A, B, C and the threshold eps0.
    Threshold {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// `2 asinh T`.
    LogFactor {
        #[arg(long = "T", allow_hyphen_values = true)]
        t: f64,
    },
}

#[derive(Debug, Args)]
pub struct AcceptanceArgs {
    /// Criteria to run, e.g. `1,3,11`; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected 3 comma-separated numbers, got {}", v.len()))
}
