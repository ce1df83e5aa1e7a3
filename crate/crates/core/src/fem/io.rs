//! Plain-text mesh format.
//!
//! ```text
//! FATIGUE-MESH 1
//! # comments and blank lines are ignored
//! nodes <N>
//! <x> <y> <z>                 N lines, node ids are 0-based line order
//! elements <M>
//! <kind> <n0> <n1> ...        kind: tet4 | tet10 | hex8 | hex20
//! faces <F>
//! <element> <local_face> <tag>
//! dirichlet <tag> <mx> <my> <mz>   masks are 0 or 1, repeatable
//! end
//! ```
//!
//! Boundary faces not listed in the `faces` block are tagged `free`.

use std::fmt::Write as _;
use std::path::Path;

use super::element::ElementKind;
use super::mesh::{DirichletBc, Element, Mesh, FREE_TAG};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: &str = "FATIGUE-MESH 1";

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::MeshParse { line, msg: msg.into() }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next meaningful line as (1-based number, tokens).
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                return Some((i + 1, body.split_whitespace().collect()));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        let last = self.last;
        self.next().ok_or_else(|| perr(last + 1, format!("unexpected end of file, expected {what}")))
    }
}

fn count(line: usize, toks: &[&str], keyword: &str) -> Result<usize> {
    if toks.len() != 2 || toks[0] != keyword {
        return Err(perr(line, format!("expected `{keyword} <count>`")));
    }
    toks[1].parse().map_err(|_| perr(line, format!("bad {keyword} count `{}`", toks[1])))
}

fn num<T: Real>(line: usize, tok: &str) -> Result<T> {
    let v: f64 = tok.parse().map_err(|_| perr(line, format!("bad number `{tok}`")))?;
    Ok(T::lit(v))
}

fn index(line: usize, tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| perr(line, format!("bad index `{tok}`")))
}

pub fn parse_mesh<T: Real>(text: &str) -> Result<Mesh<T>> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (l, head) = lines.expect("header")?;
    if head.join(" ") != MAGIC {
        return Err(perr(l, format!("missing `{MAGIC}` header")));
    }

    let (l, toks) = lines.expect("nodes block")?;
    let n_nodes = count(l, &toks, "nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (l, t) = lines.expect("node coordinates")?;
        if t.len() != 3 {
            return Err(perr(l, "node line needs three coordinates"));
        }
        nodes.push([num(l, t[0])?, num(l, t[1])?, num(l, t[2])?]);
    }

    let (l, toks) = lines.expect("elements block")?;
    let n_elems = count(l, &toks, "elements")?;
    let mut elements = Vec::with_capacity(n_elems);
    for _ in 0..n_elems {
        let (l, t) = lines.expect("element")?;
        let kind: ElementKind = t[0].parse().map_err(|e: String| perr(l, e))?;
        if t.len() != kind.node_count() + 1 {
            return Err(perr(l, format!("{kind} needs {} node ids, got {}", kind.node_count(), t.len() - 1)));
        }
        let ids = t[1..].iter().map(|s| index(l, s)).collect::<Result<Vec<_>>>()?;
        if let Some(&bad) = ids.iter().find(|&&i| i >= n_nodes) {
            return Err(perr(l, format!("node id {bad} out of range (0..{n_nodes})")));
        }
        elements.push(Element { kind, nodes: ids });
    }

    let (l, toks) = lines.expect("faces block")?;
    let n_faces = count(l, &toks, "faces")?;
    let mut tags = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (l, t) = lines.expect("face")?;
        if t.len() != 3 {
            return Err(perr(l, "face line is `<element> <local_face> <tag>`"));
        }
        let e = index(l, t[0])?;
        let f = index(l, t[1])?;
        if e >= elements.len() || f >= elements[e].kind.face_count() {
            return Err(perr(l, format!("face ({e}, {f}) does not exist")));
        }
        tags.push((e, f, t[2].to_string()));
    }

    let mut dirichlet = Vec::new();
    loop {
        let (l, t) = lines.expect("`dirichlet` or `end`")?;
        match t[0] {
            "end" => break,
            "dirichlet" => {
                if t.len() != 5 {
                    return Err(perr(l, "dirichlet line is `dirichlet <tag> <mx> <my> <mz>`"));
                }
                let mut mask = [false; 3];
                for k in 0..3 {
                    mask[k] = match t[2 + k] {
                        "0" => false,
                        "1" => true,
                        other => return Err(perr(l, format!("mask entry must be 0 or 1, got `{other}`"))),
                    };
                }
                dirichlet.push(DirichletBc { tag: t[1].to_string(), mask });
            }
            other => return Err(perr(l, format!("unexpected `{other}`"))),
        }
    }
    if let Some((l, _)) = lines.next() {
        return Err(perr(l, "content after `end`"));
    }
    Mesh::new(nodes, elements, &tags, dirichlet)
}

pub fn load_mesh<T: Real>(path: &Path) -> Result<Mesh<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse_mesh(&text)
}

/// Serializes a mesh; coordinates use shortest round-trip formatting.
pub fn format_mesh<T: Real>(mesh: &Mesh<T>) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "nodes {}", mesh.nodes.len()).unwrap();
    for p in &mesh.nodes {
        writeln!(s, "{:?} {:?} {:?}", p[0].to_f64_lossy(), p[1].to_f64_lossy(), p[2].to_f64_lossy()).unwrap();
    }
    writeln!(s, "elements {}", mesh.elements.len()).unwrap();
    for el in &mesh.elements {
        write!(s, "{}", el.kind).unwrap();
        for n in &el.nodes {
            write!(s, " {n}").unwrap();
        }
        s.push('\n');
    }
    let tagged: Vec<_> = mesh.faces.iter().filter(|f| f.tag != FREE_TAG).collect();
    writeln!(s, "faces {}", tagged.len()).unwrap();
    for f in tagged {
        writeln!(s, "{} {} {}", f.element, f.local, f.tag).unwrap();
    }
    for bc in &mesh.dirichlet {
        let m = bc.mask.map(|b| if b { 1 } else { 0 });
        writeln!(s, "dirichlet {} {} {} {}", bc.tag, m[0], m[1], m[2]).unwrap();
    }
    s.push_str("end\n");
    s
}

pub fn save_mesh<T: Real>(mesh: &Mesh<T>, path: &Path) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))
        .map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::element::ALL_KINDS;
    use crate::fem::generate::unit_cube;

    #[test]
    fn round_trip() {
        for kind in ALL_KINDS {
            let m = unit_cube::<f64>(kind, 2).unwrap();
            let back: Mesh<f64> = parse_mesh(&format_mesh(&m)).unwrap();
            assert_eq!(back, m);
        }
    }

    const TET: &str = "FATIGUE-MESH 1\nnodes 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\nelements 1\ntet4 0 1 2 3\nfaces 1\n0 0 base\ndirichlet base 1 1 1\nend\n";

    #[test]
    fn minimal_file() {
        let m: Mesh<f64> = parse_mesh(TET).unwrap();
        assert_eq!(m.faces.len(), 4);
        assert_eq!(m.faces_with_tag("free").count(), 3);
    }

    #[test]
    fn inverted_element_is_reported() {
        let bad = TET.replace("tet4 0 1 2 3", "tet4 0 2 1 3");
        match parse_mesh::<f64>(&bad) {
            Err(Error::InvertedElement { element: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = TET.replace("1 0 0\n", "1 0 zero\n");
        match parse_mesh::<f64>(&bad) {
            Err(Error::MeshParse { line: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
        let bad = TET.replace("tet4 0 1 2 3", "tet4 0 1 2 9");
        assert!(matches!(parse_mesh::<f64>(&bad), Err(Error::MeshParse { line: 8, .. })));
        let no_bc = TET.replace("dirichlet base 1 1 1\n", "");
        assert!(matches!(parse_mesh::<f64>(&no_bc), Err(Error::Mesh(_))));
    }
}
