//! Bundled examples where the hierarchy behaves in an instructive way.

use crate::error::Result;
use crate::hierarchy::{run_hierarchy, HierarchyOptions, HierarchyRun};
use crate::instance::{InstanceFile, InstanceMetadata, PopInstance};
use crate::polyring::{ball_polynomial, motzkin, parse_polynomial};

#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub instance: PopInstance,
    pub metadata: InstanceMetadata,
    pub k_min: usize,
    pub k_max: usize,
}

impl GalleryEntry {
    pub fn instance_file(&self) -> InstanceFile {
        InstanceFile::from_instance(&self.instance, self.metadata.clone())
    }

    pub fn run(&self) -> Result<HierarchyRun> {
        self.run_with(HierarchyOptions::default())
    }

    /// Runs over the entry's level range; other options are kept.
    pub fn run_with(&self, opts: HierarchyOptions) -> Result<HierarchyRun> {
        let opts = HierarchyOptions {
            k_min: Some(self.k_min),
            k_max: self.k_max,
            ..opts
        };
        run_hierarchy(&self.instance, &opts)
    }
}

fn poly(s: &str, n: usize) -> crate::Polynomial {
    parse_polynomial(s, n).expect("gallery polynomial parses")
}

pub fn gallery() -> Vec<GalleryEntry> {
    let third = (1.0f64 / 3.0).sqrt();
    vec![
        GalleryEntry {
            name: "motzkin-ball",
            description: "Motzkin polynomial over the unit ball: nonnegative but not a sum of \
                          squares; the bounds are negative and increase towards 0 without ever \
                          reaching it, and no level is flat",
            instance: PopInstance::new(motzkin(), vec![], vec![ball_polynomial(3, 1.0)])
                .expect("shared nvars"),
            metadata: InstanceMetadata {
                name: Some("motzkin-ball".into()),
                f_min: Some(0.0),
                minimizers: vec![vec![0.0; 3], vec![third; 3]],
                ball_r: Some(1.0),
            },
            k_min: 3,
            k_max: 6,
        },
        GalleryEntry {
            name: "quadratic-ball",
            description: "strictly convex quadratic with its minimizer inside a ball: the first \
                          level is exact and flat, and the minimizer is read off the moments",
            instance: PopInstance::new(
                poly("x1^2 - 2 * x1 + x2^2 + 4 * x2 + 5", 2),
                vec![],
                vec![ball_polynomial(2, 10.0)],
            )
            .expect("shared nvars"),
            metadata: InstanceMetadata {
                name: Some("quadratic-ball".into()),
                f_min: Some(0.0),
                minimizers: vec![vec![1.0, -2.0]],
                ball_r: Some(10.0),
            },
            k_min: 1,
            k_max: 3,
        },
        GalleryEntry {
            name: "linear-ball",
            description: "linear objective x1 + x2 over the unit ball: the minimizer lies on the \
                          boundary, with multiplier 1/sqrt(2) on the ball constraint",
            instance: PopInstance::new(poly("x1 + x2", 2), vec![], vec![ball_polynomial(2, 1.0)])
                .expect("shared nvars"),
            metadata: InstanceMetadata {
                name: Some("linear-ball".into()),
                f_min: Some(-(2.0f64).sqrt()),
                minimizers: vec![vec![-(0.5f64).sqrt(); 2]],
                ball_r: Some(1.0),
            },
            k_min: 1,
            k_max: 3,
        },
        GalleryEntry {
            name: "quartic-double-well",
            description: "x1^4 - x1^2 over [-1, 1] (as 1 - x1^2 >= 0): two global minimizers \
                          +-1/sqrt(2), so the moment matrix is flat with rank 2 and no single \
                          point is extracted",
            instance: PopInstance::new(poly("x1^4 - x1^2", 1), vec![], vec![poly("1 - x1^2", 1)])
                .expect("shared nvars"),
            metadata: InstanceMetadata {
                name: Some("quartic-double-well".into()),
                f_min: Some(-0.25),
                minimizers: vec![vec![-(0.5f64).sqrt()], vec![(0.5f64).sqrt()]],
                ball_r: None,
            },
            k_min: 2,
            k_max: 4,
        },
    ]
}

pub fn entry(name: &str) -> Option<GalleryEntry> {
    gallery().into_iter().find(|e| e.name == name)
}
