//! On-disk formats: binary PPM/PGM images, raw little-endian rasters and
//! the CSV logs. CSV files open with `# key: value` lines.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use vrcockpit_core::cockpit::Mask;
use vrcockpit_core::games::{Event, SessionLog, TickedEvent};
use vrcockpit_core::games::session::MetricsRow;
use vrcockpit_core::metrics::Region;

pub fn hex_hash(hash: u64) -> String {
    format!("{hash:016x}")
}

fn write_netpbm(path: &Path, magic: &str, width: usize, height: usize, comment: &str, data: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(data.len() + 64);
    write!(out, "{magic}\n# {comment}\n{width} {height}\n255\n")?;
    out.extend_from_slice(data);
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Binary PPM (P6), with the comment line carrying provenance.
pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8], comment: &str) -> Result<()> {
    if rgb.len() != width * height * 3 {
        bail!("{}: {} bytes for a {width}x{height} image", path.display(), rgb.len());
    }
    write_netpbm(path, "P6", width, height, comment, rgb)
}

/// Mask as an 8-bit PGM (P5), 255 inside.
pub fn write_mask(path: &Path, mask: &Mask, comment: &str) -> Result<()> {
    let data: Vec<u8> = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_netpbm(path, "P5", mask.width, mask.height, comment, &data)
}

fn netpbm_token(r: &mut impl BufRead) -> Result<String> {
    let mut tok = String::new();
    loop {
        let buf = r.fill_buf()?;
        if buf.is_empty() {
            break;
        }
        let c = buf[0];
        if c == b'#' && tok.is_empty() {
            let mut line = String::new();
            r.read_line(&mut line)?;
            continue;
        }
        r.consume(1);
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c as char);
    }
    if tok.is_empty() {
        bail!("truncated header");
    }
    Ok(tok)
}

fn read_netpbm(path: &Path, magic: &str, channels: usize) -> Result<(usize, usize, Vec<u8>)> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(file);
    let parse = |r: &mut BufReader<fs::File>| -> Result<(usize, usize, Vec<u8>)> {
        let m = netpbm_token(r)?;
        if m != magic {
            bail!("expected {magic}, found {m}");
        }
        let w: usize = netpbm_token(r)?.parse()?;
        let h: usize = netpbm_token(r)?.parse()?;
        let max: usize = netpbm_token(r)?.parse()?;
        if max != 255 {
            bail!("only 8-bit images are supported (maxval {max})");
        }
        let mut data = vec![0u8; w * h * channels];
        r.read_exact(&mut data).context("truncated pixel data")?;
        Ok((w, h, data))
    };
    parse(&mut r).with_context(|| format!("reading {}", path.display()))
}

pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<[u8; 3]>)> {
    let (w, h, data) = read_netpbm(path, "P6", 3)?;
    Ok((w, h, data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()))
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    let (width, height, data) = read_netpbm(path, "P5", 1)?;
    Ok(Mask { width, height, bits: data.into_iter().map(|v| v >= 128).collect() })
}

pub fn write_f32_raster(path: &Path, values: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_u32_raster(path: &Path, values: &[u32]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_f32_raster(path: &Path, len: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() != len * 4 {
        bail!("{}: expected {} bytes, found {}", path.display(), len * 4, bytes.len());
    }
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

/// `# key: value` preamble lines.
pub fn preamble(kind: &str, pairs: &[(&str, String)]) -> String {
    let mut s = format!("# vrcockpit {kind}\n");
    for (k, v) in pairs {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    s
}

/// Reads the `# key: value` lines at the top of a CSV file.
pub fn read_preamble(text: &str) -> Vec<(String, String)> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').trim().split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn csv_to_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    Ok(String::from_utf8(bytes)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub const SESSION_COLUMNS: [&str; 16] = [
    "tick",
    "time",
    "x",
    "y",
    "z",
    "yaw",
    "pitch",
    "roll",
    "head_yaw",
    "head_pitch",
    "speed",
    "coins",
    "crashes",
    "distance",
    "shots_received",
    "robots_alive",
];

/// Per-tick log. Angles are radians.
pub fn session_csv(log: &SessionLog) -> Result<String> {
    let h = &log.header;
    let mut s = preamble(
        "session",
        &[
            ("game", h.game.name().to_string()),
            ("condition", h.condition.label().to_string()),
            ("seed", h.seed.to_string()),
            ("dt", h.dt.to_string()),
            ("config_hash", hex_hash(h.config_hash)),
        ],
    );
    let rows = log.rows.iter().map(|r| {
        let (yaw, pitch, roll) = r.body.ypr();
        let p = r.body.position;
        vec![
            r.tick.to_string(),
            r.time.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.z.to_string(),
            yaw.to_string(),
            pitch.to_string(),
            roll.to_string(),
            r.head_yaw.to_string(),
            r.head_pitch.to_string(),
            r.speed.to_string(),
            r.coins.to_string(),
            r.crashes.to_string(),
            r.distance.to_string(),
            r.shots_received.to_string(),
            r.robots_alive.to_string(),
        ]
    });
    s.push_str(&csv_to_string(&SESSION_COLUMNS, rows)?);
    Ok(s)
}

pub fn events_csv(events: &[TickedEvent], config_hash: u64, condition: &str) -> Result<String> {
    let mut s = preamble(
        "events",
        &[("condition", condition.to_string()), ("config_hash", hex_hash(config_hash))],
    );
    let rows = events.iter().map(|e| {
        let (kind, subject, hit, value) = match e.event {
            Event::Coin { coin } => ("coin", coin.to_string(), String::new(), String::new()),
            Event::Crash { barrier } => ("crash", barrier.to_string(), String::new(), String::new()),
            Event::Respawn => ("respawn", String::new(), String::new(), String::new()),
            Event::Lap { lap } => ("lap", String::new(), String::new(), lap.to_string()),
            Event::Shot { robot, hit, hits_taken } => ("shot", robot.to_string(), hit.to_string(), hits_taken.to_string()),
            Event::Reload => ("reload", String::new(), String::new(), String::new()),
            Event::Kill { robot } => ("kill", robot.to_string(), String::new(), String::new()),
            Event::RobotShot { robot, hit } => ("robot_shot", robot.to_string(), hit.to_string(), String::new()),
        };
        vec![e.tick.to_string(), kind.to_string(), subject, hit, value]
    });
    s.push_str(&csv_to_string(&["tick", "kind", "subject", "hit", "value"], rows)?);
    Ok(s)
}

pub const METRICS_COLUMNS: [&str; 5] = ["tick", "region", "mean_flow_deg_s", "depth_range_m", "pixels"];

/// Region metrics, optionally restricted to some regions.
pub fn metrics_csv(
    rows: &[MetricsRow],
    regions: &[Region],
    config_hash: u64,
    condition: &str,
    render_every: u32,
) -> Result<String> {
    let mut s = preamble(
        "metrics",
        &[
            ("condition", condition.to_string()),
            ("config_hash", hex_hash(config_hash)),
            ("render_every", render_every.to_string()),
        ],
    );
    let body = rows.iter().filter(|r| regions.contains(&r.stats.region)).map(|r| {
        vec![
            r.tick.to_string(),
            r.stats.region.label().to_string(),
            opt(r.stats.mean_flow_deg_s),
            opt(r.stats.depth_range_m),
            r.stats.pixels.to_string(),
        ]
    });
    s.push_str(&csv_to_string(&METRICS_COLUMNS, body)?);
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        anyhow!("{}: {at}: {}", path.display(), e.into_inner())
    })
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    match fs::create_dir_all(path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Ok(()),
        Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ppm");
        let px: Vec<[u8; 3]> = (0..12).map(|i| [i as u8, 2 * i as u8, 255 - i as u8]).collect();
        let bytes: Vec<u8> = px.iter().flatten().copied().collect();
        write_ppm(&p, 4, 3, &bytes, "config_hash 00ff").unwrap();
        let (w, h, back) = read_ppm(&p).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(back, px);
        assert!(fs::read(&p).unwrap().starts_with(b"P6\n# config_hash 00ff\n4 3\n255\n"));
    }

    #[test]
    fn mask_and_raster_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mask = Mask { width: 3, height: 2, bits: vec![true, false, true, false, false, true] };
        let p = dir.path().join("m.pgm");
        write_mask(&p, &mask, "x").unwrap();
        assert_eq!(read_mask(&p).unwrap(), mask);
        let depth = [1.5f32, f32::INFINITY, 0.25];
        let p = dir.path().join("d.f32");
        write_f32_raster(&p, &depth).unwrap();
        assert_eq!(read_f32_raster(&p, 3).unwrap(), depth);
        assert!(read_f32_raster(&p, 4).is_err());
    }

    #[test]
    fn rejects_bad_images() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.ppm");
        fs::write(&p, b"P6\n4 4\n255\n\x00\x01").unwrap();
        assert!(read_ppm(&p).unwrap_err().to_string().contains("bad.ppm"));
        fs::write(&p, b"P5\n1 1\n255\n\x00").unwrap();
        assert!(read_ppm(&p).is_err());
    }

    #[test]
    fn preamble_parses_back() {
        let text = preamble("x", &[("seed", "3".into()), ("config_hash", hex_hash(255))]) + "a,b\n1,2\n";
        let kv = read_preamble(&text);
        assert_eq!(kv[0], ("seed".to_string(), "3".to_string()));
        assert_eq!(kv[1].1, "00000000000000ff");
    }
}
