//! JSON motion files.
//!
//! ```json
//! {"fps": 50.0, "joint_names": ["j0"], "frames": [{"q": [0.0], "base_pos": [0,0,0],
//!   "base_quat": [1,0,0,0], "body_pos": [[0,0,0]], "contacts": [true]}], "feet_indices": [0]}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MotionClip;
use crate::error::{Error, Result};
use crate::fsio::write_atomic;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionFile {
    fps: f64,
    joint_names: Vec<String>,
    frames: Vec<FrameRecord>,
    feet_indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    q: Vec<f64>,
    base_pos: [f64; 3],
    base_quat: [f64; 4],
    body_pos: Vec<[f64; 3]>,
    contacts: Vec<bool>,
}

/// Parses a motion document already in memory.
pub fn parse_motion(text: &str) -> Result<MotionClip> {
    let file: MotionFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let t = file.frames.len();
    let mut q = Vec::with_capacity(t);
    let mut base_pos = Vec::with_capacity(t);
    let mut base_quat = Vec::with_capacity(t);
    let mut body_pos = Vec::with_capacity(t);
    let mut contacts = Vec::with_capacity(t);
    for fr in file.frames {
        q.push(fr.q);
        base_pos.push(fr.base_pos);
        base_quat.push(fr.base_quat);
        body_pos.push(fr.body_pos);
        contacts.push(fr.contacts);
    }
    MotionClip::new(file.fps, file.joint_names, q, base_pos, base_quat, body_pos, contacts, file.feet_indices)
}

pub fn load_motion(path: &Path) -> Result<MotionClip> {
    let text = fs::read_to_string(path)?;
    parse_motion(&text)
}

/// Serializes a clip; every number is written in shortest round-trip form.
pub fn to_json_string(clip: &MotionClip) -> Result<String> {
    let finite = clip.q.iter().flatten().all(|x| x.is_finite())
        && clip.body_pos.iter().flatten().flatten().all(|x| x.is_finite())
        && clip.base_pos.iter().flatten().all(|x| x.is_finite())
        && clip.base_quat.iter().flatten().all(|x| x.is_finite());
    if !finite || !clip.fps.is_finite() {
        return Err(Error::Validation("clip contains non-finite values".into()));
    }
    let file = MotionFile {
        fps: clip.fps,
        joint_names: clip.joint_names.clone(),
        frames: (0..clip.len())
            .map(|t| FrameRecord {
                q: clip.q[t].clone(),
                base_pos: clip.base_pos[t],
                base_quat: clip.base_quat[t],
                body_pos: clip.body_pos[t].clone(),
                contacts: clip.contacts[t].clone(),
            })
            .collect(),
        feet_indices: clip.feet_indices.clone(),
    };
    serde_json::to_string(&file).map_err(|e| Error::Validation(e.to_string()))
}

pub fn save_motion(clip: &MotionClip, path: &Path) -> Result<()> {
    let text = to_json_string(clip)?;
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"fps": 50, "joint_names": ["a"], "feet_indices": [0],
        "frames": [
          {"q": [0.1], "base_pos": [0,0,0], "base_quat": [1,0,0,0], "body_pos": [[0,0,0.2]], "contacts": [true]},
          {"q": [0.2], "base_pos": [0,0,0], "base_quat": [1,0,0,0], "body_pos": [[0,0,0.3]], "contacts": [false]}
        ]}"#;

    #[test]
    fn minimal_file() {
        let clip = parse_motion(MINIMAL).unwrap();
        assert_eq!(clip.len(), 2);
        assert_eq!(clip.n_joints(), 1);
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace(r#""fps": 50, "#, "");
        match parse_motion(&text) {
            Err(Error::Schema(msg)) => assert!(msg.contains("fps"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn extra_key_is_named() {
        let text = MINIMAL.replace(r#""fps": 50, "#, r#""fps": 50, "speed": 2, "#);
        match parse_motion(&text) {
            Err(Error::Schema(msg)) => assert!(msg.contains("speed"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contact_length_mismatch() {
        let text = MINIMAL.replace(r#""contacts": [false]"#, r#""contacts": [false, true]"#);
        assert!(matches!(parse_motion(&text), Err(Error::Dimension(_))));
    }

    #[test]
    fn two_frame_file_has_two_entries() {
        let clip = parse_motion(MINIMAL).unwrap();
        let text = to_json_string(&clip).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["frames"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn unwritable_path() {
        let clip = parse_motion(MINIMAL).unwrap();
        let err = save_motion(&clip, Path::new("/nonexistent-dir/x/clip.json")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
