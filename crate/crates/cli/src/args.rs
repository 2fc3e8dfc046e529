//! Command-line grammar.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vantage_core::scenes::SceneFamily;

#[derive(Parser, Debug)]
#[command(name = "vantage", version, about = "Level-set visibility planning: surveillance, exploration, datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Greedy coverage of a known map (every free node is a candidate).
    Survey(PlanArgs),
    /// Greedy exploration of an unknown map (only seen nodes are candidates).
    Explore(PlanArgs),
    /// Writes the exact gain field of the state reached after `--x0` (and
    /// any `--visit`) as RFA.
    Gainmap(GainmapArgs),
    /// Generates a training dataset from random scenes.
    Dataset(DatasetArgs),
    /// Overlays the vantages of many exploration runs from random starts.
    Frequency(FrequencyArgs),
    /// Prints art-gallery bounds next to the greedy vantage count.
    Gallery(GalleryArgs),
    /// Writes the occupancy mask of a map source as PGM or PNG.
    Scene(SceneArgs),
    /// Renders a 2D RFA field as a min-max scaled PGM or PNG.
    Topgm(TopgmArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct MapSource {
    /// Occupancy image (PGM or PNG); bright pixels are obstacles.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Polygon gallery as JSON {"outer": [[x, y], ...], "holes": [...]}.
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    /// The built-in 58-vertex comb gallery.
    #[arg(long)]
    pub comb: bool,
    /// Random scene family; combine with --seed and --shape.
    #[arg(long, value_enum)]
    pub recipe: Option<Family>,
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    #[command(flatten)]
    pub source: MapSource,
    /// Grid spacing; defaults to 1 for images and recipes and to 1/200 of
    /// the longer side for polygons.
    #[arg(long)]
    pub dx: Option<f64>,
    /// Grid shape for --recipe, e.g. 128x128 or 64x64x64.
    #[arg(long, default_value = "128x128")]
    pub shape: Shape,
    /// Pixel values above this are obstacles (--map).
    #[arg(long, default_value_t = 127)]
    pub threshold: u8,
    /// Seed for the scene recipe and the random estimator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Radial,
    Disks,
    Blocks,
    Primitives3d,
}

impl From<Family> for SceneFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Radial => SceneFamily::Radial,
            Family::Disks => SceneFamily::Disks,
            Family::Blocks => SceneFamily::Blocks,
            Family::Primitives3d => SceneFamily::Primitives3d,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct StopArgs {
    /// Stop when the normalized maximum gain drops below this.
    #[arg(long, default_value_t = 1e-3)]
    pub eps_gain: f64,
    /// Stop when the residual drops below this.
    #[arg(long = "delta-res", default_value_t = 1e-3)]
    pub delta_res: f64,
    /// Maximum number of vantages, the first one included.
    #[arg(long, default_value_t = 100)]
    pub max_steps: usize,
    /// Keep going after the shadow boundary has vanished.
    #[arg(long)]
    pub ignore_boundary: bool,
}

#[derive(Args, Debug, Clone)]
pub struct PlanArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    /// exact, random, or external:<command>.
    #[arg(long, default_value = "exact")]
    pub estimator: String,
    /// Starting node as comma-separated indices; defaults to the free node
    /// farthest from obstacles.
    #[arg(long)]
    pub x0: Option<Node>,
    /// Threads for gain evaluation; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Directory for trace.json and snapshots.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Write Psi, boundary and gain RFA snapshots every N steps (0 = never).
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: usize,
    /// Record per-step wall-clock times in the trace.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Surveillance,
    Exploration,
}

#[derive(Args, Debug, Clone)]
pub struct GainmapArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub x0: Option<Node>,
    /// Further vantages folded into the state, in order.
    #[arg(long = "visit")]
    pub visits: Vec<Node>,
    #[arg(long, value_enum, default_value_t = Mode::Exploration)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output RFA file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct DatasetArgs {
    /// Scene families, cycled over the maps.
    #[arg(long = "recipe", value_enum, required = true)]
    pub recipes: Vec<Family>,
    #[arg(long, default_value = "128x128")]
    pub shape: Shape,
    #[arg(long, default_value_t = 1.0)]
    pub dx: f64,
    #[arg(long, default_value_t = 1)]
    pub maps: usize,
    #[arg(long, default_value_t = 1)]
    pub episodes: usize,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct FrequencyArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    #[arg(long, default_value = "random")]
    pub estimator: String,
    /// Number of runs, each from a seeded random free start.
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Gaussian width in world units.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output RFA file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct GalleryArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub x0: Option<Node>,
    #[arg(long, default_value_t = 1e-3)]
    pub delta_res: f64,
    #[arg(long, default_value_t = 100)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SceneArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct TopgmArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_list(s: &str, sep: char) -> Result<Vec<usize>, String> {
    s.split(sep)
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

/// Grid extents written as `128x128` or `64x64x64`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape(pub Vec<usize>);

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let shape = parse_list(s, 'x')?;
        if !(2..=3).contains(&shape.len()) {
            return Err(format!("shape {s:?} must have 2 or 3 extents"));
        }
        Ok(Self(shape))
    }
}

/// Node indices written as `12,40` or `3,4,5`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node(pub Vec<usize>);

impl FromStr for Node {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s, ',').map(Self)
    }
}
