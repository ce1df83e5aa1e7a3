use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::element::{interpolate, jacobian, ElementKind, QuadratureOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::{cross, norm, Mat3, Vec3};

/// Tag given to boundary faces the mesh file does not mention.
pub const FREE_TAG: &str = "free";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub nodes: Vec<usize>,
}

/// A boundary face: local face `local` of `element`, with its region tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryFace {
    pub element: usize,
    pub local: usize,
    pub tag: String,
}

/// Homogeneous Dirichlet condition on every face carrying `tag`; `mask`
/// selects the constrained displacement components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirichletBc {
    pub tag: String,
    pub mask: [bool; 3],
}

impl DirichletBc {
    pub fn clamped(tag: impl Into<String>) -> Self {
        Self { tag: tag.into(), mask: [true; 3] }
    }

    /// Constrains a single component (a roller on a symmetry plane).
    pub fn roller(tag: impl Into<String>, component: usize) -> Self {
        let mut mask = [false; 3];
        mask[component] = true;
        Self { tag: tag.into(), mask }
    }
}

/// Volume mesh with its boundary faces and Dirichlet declarations.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    pub nodes: Vec<[T; 3]>,
    pub elements: Vec<Element>,
    /// Every boundary face, sorted by `(element, local)`; the index is the face id.
    pub faces: Vec<BoundaryFace>,
    pub dirichlet: Vec<DirichletBc>,
}

/// A surface quadrature point with the geometry needed downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceQp<T> {
    pub face: usize,
    pub element: usize,
    /// Element reference coordinates.
    pub xi: [T; 3],
    pub x: [T; 3],
    /// Reference weight times the surface Gram factor.
    pub weight: T,
    /// Outward unit normal.
    pub normal: Vec3<T>,
}

fn face_key(elem: &Element, local: usize) -> Vec<usize> {
    let mut key: Vec<usize> = elem.kind.faces()[local].iter().map(|&c| elem.nodes[c]).collect();
    key.sort_unstable();
    key
}

impl<T: Real> Mesh<T> {
    /// Builds and validates a mesh. `tags` assigns region tags to boundary
    /// faces; untagged boundary faces get [`FREE_TAG`].
    pub fn new(
        nodes: Vec<[T; 3]>,
        elements: Vec<Element>,
        tags: &[(usize, usize, String)],
        dirichlet: Vec<DirichletBc>,
    ) -> Result<Self> {
        for (e, el) in elements.iter().enumerate() {
            if el.nodes.len() != el.kind.node_count() {
                return Err(Error::Mesh(format!(
                    "element {e}: {} needs {} nodes, got {}",
                    el.kind,
                    el.kind.node_count(),
                    el.nodes.len()
                )));
            }
            if let Some(&bad) = el.nodes.iter().find(|&&n| n >= nodes.len()) {
                return Err(Error::Mesh(format!("element {e} references node {bad}, mesh has {}", nodes.len())));
            }
        }
        if nodes.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Mesh("non-finite node coordinate".into()));
        }

        let mut seen: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        for (e, el) in elements.iter().enumerate() {
            for f in 0..el.kind.face_count() {
                seen.entry(face_key(el, f)).or_default().push((e, f));
            }
        }
        let mut boundary: BTreeMap<(usize, usize), String> = BTreeMap::new();
        for (key, owners) in &seen {
            match owners.len() {
                1 => {
                    boundary.insert(owners[0], FREE_TAG.to_string());
                }
                2 => {}
                _ => {
                    return Err(Error::Mesh(format!(
                        "face with corners {key:?} is shared by {} elements",
                        owners.len()
                    )))
                }
            }
        }
        for (e, f, tag) in tags {
            if *e >= elements.len() || *f >= elements[*e].kind.face_count() {
                return Err(Error::Mesh(format!("tagged face ({e}, {f}) does not exist")));
            }
            match boundary.get_mut(&(*e, *f)) {
                Some(t) => *t = tag.clone(),
                None => return Err(Error::Mesh(format!("tagged face ({e}, {f}) is not on the boundary"))),
            }
        }
        let faces = boundary.into_iter().map(|((element, local), tag)| BoundaryFace { element, local, tag }).collect();

        let mesh = Self { nodes, elements, faces, dirichlet };
        mesh.check_jacobians(&QuadratureOptions::default())?;
        mesh.check_dirichlet()?;
        Ok(mesh)
    }

    fn check_dirichlet(&self) -> Result<()> {
        for bc in &self.dirichlet {
            if !self.faces.iter().any(|f| f.tag == bc.tag) {
                return Err(Error::Mesh(format!("Dirichlet tag `{}` names no boundary face", bc.tag)));
            }
        }
        if !self.dirichlet.iter().any(|bc| bc.mask.iter().any(|&m| m)) {
            return Err(Error::Mesh("Dirichlet region is empty".into()));
        }
        Ok(())
    }

    /// Fails with the first element whose Jacobian determinant is not
    /// positive at a volume quadrature point or its reference centroid.
    pub fn check_jacobians(&self, opts: &QuadratureOptions) -> Result<()> {
        for (e, el) in self.elements.iter().enumerate() {
            let coords = self.element_coords(e);
            let rule = el.kind.volume_rule::<T>(opts);
            let centroid = el.kind.reference_centroid::<T>();
            for xi in rule.points.iter().chain(std::iter::once(&centroid)) {
                let (_, dn) = el.kind.shape_vec(xi);
                let det = jacobian(&coords, &dn).det();
                if !(det > T::zero()) {
                    return Err(Error::InvertedElement { element: e, det: det.to_f64_lossy() });
                }
            }
        }
        Ok(())
    }

    pub fn element_coords(&self, e: usize) -> Vec<[T; 3]> {
        self.elements[e].nodes.iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn dof_count(&self) -> usize {
        3 * self.nodes.len()
    }

    pub fn is_dirichlet_tag(&self, tag: &str) -> bool {
        self.dirichlet.iter().any(|bc| bc.tag == tag && bc.mask.iter().any(|&m| m))
    }

    /// Face ids not carrying a Dirichlet tag.
    pub fn neumann_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| !self.is_dirichlet_tag(&self.faces[f].tag)).collect()
    }

    pub fn faces_with_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = usize> + 'a {
        (0..self.faces.len()).filter(move |&f| self.faces[f].tag == tag)
    }

    /// Distinct face tags in first-appearance order.
    pub fn tags(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in &self.faces {
            if !out.contains(&f.tag) {
                out.push(f.tag.clone());
            }
        }
        out
    }

    /// Global node ids of boundary face `f` (corners first).
    pub fn face_nodes(&self, f: usize) -> Vec<usize> {
        let bf = &self.faces[f];
        let el = &self.elements[bf.element];
        el.kind.face_nodes(bf.local).into_iter().map(|a| el.nodes[a]).collect()
    }

    /// Per-node constrained components.
    pub fn constrained(&self) -> Vec<[bool; 3]> {
        let mut mask = vec![[false; 3]; self.nodes.len()];
        for bc in &self.dirichlet {
            for f in self.faces_with_tag(&bc.tag) {
                for n in self.face_nodes(f) {
                    for k in 0..3 {
                        mask[n][k] |= bc.mask[k];
                    }
                }
            }
        }
        mask
    }

    /// Geometry of face `f` at face parameters `rs`: element reference
    /// point, physical point, surface Jacobian columns and the volume
    /// Jacobian.
    pub fn face_geometry(&self, f: usize, rs: &[T; 2]) -> FaceGeometry<T> {
        let bf = &self.faces[f];
        let kind = self.elements[bf.element].kind;
        let coords = self.element_coords(bf.element);
        let (xi, [tr, ts]) = kind.face_map(bf.local, rs);
        let (n, dn) = kind.shape_vec(&xi);
        let jk = jacobian(&coords, &dn);
        let jr = jk.mul_vec(&tr);
        let js = jk.mul_vec(&ts);
        let c = cross(&jr, &js);
        let gram = norm(&c);
        FaceGeometry {
            xi,
            x: interpolate(&coords, &n),
            tangents: [jr, js],
            gram,
            normal: c.map(|v| v / gram),
            jacobian: jk,
        }
    }

    /// Surface quadrature points of every boundary face, in face order.
    pub fn surface_quadrature(&self, opts: &QuadratureOptions) -> Vec<SurfaceQp<T>> {
        let mut out = Vec::new();
        for f in 0..self.faces.len() {
            out.extend(self.face_quadrature(f, opts));
        }
        out
    }

    pub fn face_quadrature(&self, f: usize, opts: &QuadratureOptions) -> Vec<SurfaceQp<T>> {
        let bf = &self.faces[f];
        let kind = self.elements[bf.element].kind;
        let rule = kind.face_rule::<T>(opts);
        rule.iter()
            .map(|(p, w)| {
                let g = self.face_geometry(f, &[p[0], p[1]]);
                SurfaceQp { face: f, element: bf.element, xi: g.xi, x: g.x, weight: w * g.gram, normal: g.normal }
            })
            .collect()
    }

    /// Sum of face areas with the given rule.
    pub fn surface_area(&self, opts: &QuadratureOptions) -> T {
        crate::scalar::kahan_sum(self.surface_quadrature(opts).into_iter().map(|q| q.weight))
    }

    pub fn volume(&self) -> T {
        let opts = QuadratureOptions::default();
        let mut acc = crate::scalar::KahanSum::new();
        for (e, el) in self.elements.iter().enumerate() {
            let coords = self.element_coords(e);
            for (xi, w) in el.kind.volume_rule::<T>(&opts).iter() {
                let (_, dn) = el.kind.shape_vec(xi);
                acc.add(w * jacobian(&coords, &dn).det());
            }
        }
        acc.value()
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> ([T; 3], [T; 3]) {
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for p in &self.nodes {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Copy with every node moved by `displacement(node)`, re-validated.
    pub fn perturbed(&self, displacement: impl Fn(usize, &[T; 3]) -> [T; 3]) -> Result<Self> {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = displacement(i, p);
                [p[0] + d[0], p[1] + d[1], p[2] + d[2]]
            })
            .collect();
        let out = Self { nodes, ..self.clone() };
        out.check_jacobians(&QuadratureOptions::default())?;
        Ok(out)
    }

    /// Element adjacency through shared nodes, sorted.
    pub fn node_to_elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (e, el) in self.elements.iter().enumerate() {
            for &n in &el.nodes {
                if out[n].last() != Some(&e) {
                    out[n].push(e);
                }
            }
        }
        out
    }

    /// Uniform refinement of a linear mesh: each hex8 into 8, each tet4 into
    /// 8. Face tags are inherited; new nodes sit at edge, face and cell
    /// midpoints of the straight-sided geometry.
    pub fn refine_uniform(&self) -> Result<Self> {
        if self.elements.iter().any(|e| e.kind.is_quadratic()) {
            return Err(Error::Mesh("uniform refinement only supports tet4 and hex8 meshes".into()));
        }
        super::refine::refine(self)
    }
}

/// Geometry of a boundary face at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct FaceGeometry<T> {
    pub xi: [T; 3],
    pub x: [T; 3],
    /// `J_K ∂ξ/∂r`, `J_K ∂ξ/∂s`.
    pub tangents: [Vec3<T>; 2],
    pub gram: T,
    pub normal: Vec3<T>,
    pub jacobian: Mat3<T>,
}
