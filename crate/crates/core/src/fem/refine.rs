//! Uniform 1-to-8 refinement of linear meshes.

use std::collections::{HashMap, HashSet};

use super::element::{jacobian, ElementKind};
use super::mesh::{Element, Mesh};
use crate::error::Result;
use crate::scalar::Real;

/// Node registry keyed by the sorted parent corners a new node averages.
struct Points<T> {
    nodes: Vec<[T; 3]>,
    by_key: HashMap<Vec<usize>, usize>,
}

impl<T: Real> Points<T> {
    fn at(&mut self, mut key: Vec<usize>) -> usize {
        key.sort_unstable();
        key.dedup();
        if key.len() == 1 {
            return key[0];
        }
        if let Some(&id) = self.by_key.get(&key) {
            return id;
        }
        let inv = T::one() / T::from_usize_lossy(key.len());
        let mut p = [T::zero(); 3];
        for &k in &key {
            for c in 0..3 {
                p[c] = p[c] + self.nodes[k][c] * inv;
            }
        }
        let id = self.nodes.len();
        self.nodes.push(p);
        self.by_key.insert(key, id);
        id
    }
}

pub(super) fn refine<T: Real>(mesh: &Mesh<T>) -> Result<Mesh<T>> {
    let mut pts = Points { nodes: mesh.nodes.clone(), by_key: HashMap::new() };
    let mut elements = Vec::with_capacity(8 * mesh.elements.len());
    for el in &mesh.elements {
        match el.kind {
            ElementKind::Hex8 => refine_hex(&el.nodes, &mut pts, &mut elements),
            _ => refine_tet(&el.nodes, &mut pts, &mut elements),
        }
    }

    // Refined node sets of each parent boundary face.
    let mut face_sets: Vec<(HashSet<usize>, String)> = Vec::new();
    for bf in &mesh.faces {
        let el = &mesh.elements[bf.element];
        let corners: Vec<usize> = el.kind.faces()[bf.local].iter().map(|&c| el.nodes[c]).collect();
        let mut set: HashSet<usize> = corners.iter().copied().collect();
        let m = corners.len();
        for k in 0..m {
            set.insert(pts.at(vec![corners[k], corners[(k + 1) % m]]));
        }
        if m == 4 {
            set.insert(pts.at(corners.clone()));
        }
        face_sets.push((set, bf.tag.clone()));
    }
    let mut tags = Vec::new();
    for (e, el) in elements.iter().enumerate() {
        for f in 0..el.kind.face_count() {
            let corners: Vec<usize> = el.kind.faces()[f].iter().map(|&c| el.nodes[c]).collect();
            if let Some((_, tag)) = face_sets.iter().find(|(s, _)| corners.iter().all(|c| s.contains(c))) {
                tags.push((e, f, tag.clone()));
            }
        }
    }
    Mesh::new(pts.nodes, elements, &tags, mesh.dirichlet.clone())
}

fn refine_hex<T: Real>(nodes: &[usize], pts: &mut Points<T>, out: &mut Vec<Element>) {
    // Lattice coordinate 0/2 picks a side, 1 averages both sides.
    let corner_of = |x: usize, y: usize, z: usize| -> usize {
        let sx = x == 2;
        let sy = y == 2;
        let sz = z == 2;
        let id = match (sx, sy) {
            (false, false) => 0,
            (true, false) => 1,
            (true, true) => 2,
            (false, true) => 3,
        };
        nodes[id + if sz { 4 } else { 0 }]
    };
    let mut lattice = [[[0usize; 3]; 3]; 3];
    for (x, plane) in lattice.iter_mut().enumerate() {
        for (y, row) in plane.iter_mut().enumerate() {
            for (z, slot) in row.iter_mut().enumerate() {
                let xs: &[usize] = if x == 1 { &[0, 2] } else { std::slice::from_ref(&x) };
                let ys: &[usize] = if y == 1 { &[0, 2] } else { std::slice::from_ref(&y) };
                let zs: &[usize] = if z == 1 { &[0, 2] } else { std::slice::from_ref(&z) };
                let mut key = Vec::new();
                for &a in xs {
                    for &b in ys {
                        for &c in zs {
                            key.push(corner_of(a, b, c));
                        }
                    }
                }
                *slot = pts.at(key);
            }
        }
    }
    const PATTERN: [[usize; 3]; 8] =
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]];
    for k in 0..2 {
        for j in 0..2 {
            for i in 0..2 {
                let child = PATTERN.iter().map(|p| lattice[i + p[0]][j + p[1]][k + p[2]]).collect();
                out.push(Element { kind: ElementKind::Hex8, nodes: child });
            }
        }
    }
}

fn refine_tet<T: Real>(v: &[usize], pts: &mut Points<T>, out: &mut Vec<Element>) {
    let mut m = |a: usize, b: usize| pts.at(vec![v[a], v[b]]);
    let (m01, m02, m03, m12, m13, m23) = (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
    let children = [
        [v[0], m01, m02, m03],
        [m01, v[1], m12, m13],
        [m02, m12, v[2], m23],
        [m03, m13, m23, v[3]],
        [m01, m02, m03, m13],
        [m01, m02, m12, m13],
        [m02, m03, m13, m23],
        [m02, m12, m13, m23],
    ];
    for mut c in children {
        let coords: Vec<[T; 3]> = c.iter().map(|&n| pts.nodes[n]).collect();
        let (_, dn) = ElementKind::Tet4.shape_vec(&[T::zero(); 3]);
        if jacobian(&coords, &dn).det() < T::zero() {
            c.swap(1, 2);
        }
        out.push(Element { kind: ElementKind::Tet4, nodes: c.to_vec() });
    }
}
