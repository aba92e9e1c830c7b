//! Gmsh MSH 2.2 ASCII subset.
//!
//! Recognised sections are `$MeshFormat`, `$Nodes` and `$Elements`; any other
//! section (e.g. `$PhysicalNames`) is skipped. Element type 1 (2-node line)
//! becomes a boundary edge whose tag is the element's first (physical) tag,
//! type 2 (3-node triangle) becomes a triangle, and type 15 (point) is
//! ignored. Any other element type is rejected. Clockwise triangles are
//! reoriented and nodes not used by a triangle are dropped.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::scalar::Real;

use super::{BoundaryEdge, MeshError, TriMesh};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Some((i + 1, trimmed));
            }
        }
        None
    }

    fn expect(&mut self, section: &str) -> Result<(usize, &'a str), MeshError> {
        let last = self.last;
        self.next().ok_or_else(|| err(last + 1, section, "unexpected end of input"))
    }
}

fn err(line: usize, section: &str, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, section: section.to_string(), message: message.into() }
}

fn parse_num<N: std::str::FromStr>(tok: Option<&str>, line: usize, section: &str, what: &str) -> Result<N, MeshError> {
    let tok = tok.ok_or_else(|| err(line, section, format!("missing {what}")))?;
    tok.parse().map_err(|_| err(line, section, format!("cannot parse {what} from {tok:?}")))
}

/// Parses MSH 2.2 ASCII text into a validated [`TriMesh`].
pub fn parse_gmsh<T: Real>(bytes: &[u8]) -> Result<TriMesh<T>, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|e| err(1, "file", format!("not UTF-8: {e}")))?;
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };

    let mut format_seen = false;
    let mut nodes: Option<(Vec<u64>, Vec<[f64; 2]>)> = None;
    let mut triangles_raw: Vec<(usize, [u64; 3])> = Vec::new();
    let mut lines_raw: Vec<(usize, [u64; 2], u32)> = Vec::new();
    let mut elements_seen = false;

    while let Some((lno, header)) = lines.next() {
        match header {
            "$MeshFormat" => {
                let section = "$MeshFormat";
                let (l, fmt) = lines.expect(section)?;
                let mut it = fmt.split_whitespace();
                let version: String = parse_num(it.next(), l, section, "version")?;
                let file_type: u32 = parse_num(it.next(), l, section, "file type")?;
                if !version.starts_with("2.2") {
                    return Err(err(l, section, format!("unsupported version {version}, need 2.2")));
                }
                if file_type != 0 {
                    return Err(err(l, section, "binary files are not supported"));
                }
                let (l, end) = lines.expect(section)?;
                if end != "$EndMeshFormat" {
                    return Err(err(l, section, format!("expected $EndMeshFormat, found {end:?}")));
                }
                format_seen = true;
            }
            "$Nodes" => {
                let section = "$Nodes";
                if !format_seen {
                    return Err(err(lno, section, "$Nodes before $MeshFormat"));
                }
                let (l, count) = lines.expect(section)?;
                let n: usize = parse_num(Some(count), l, section, "node count")?;
                let mut ids = Vec::with_capacity(n);
                let mut coords = Vec::with_capacity(n);
                loop {
                    let (l, line) = lines.expect(section)?;
                    if line == "$EndNodes" {
                        break;
                    }
                    let mut it = line.split_whitespace();
                    ids.push(parse_num::<u64>(it.next(), l, section, "node id")?);
                    let x: f64 = parse_num(it.next(), l, section, "x coordinate")?;
                    let y: f64 = parse_num(it.next(), l, section, "y coordinate")?;
                    coords.push([x, y]);
                    if ids.len() > n {
                        return Err(err(l, section, format!("declared {n} nodes, found more")));
                    }
                }
                if ids.len() != n {
                    return Err(err(lines.last, section, format!("declared {n} nodes, found {}", ids.len())));
                }
                nodes = Some((ids, coords));
            }
            "$Elements" => {
                let section = "$Elements";
                if !format_seen {
                    return Err(err(lno, section, "$Elements before $MeshFormat"));
                }
                let (l, count) = lines.expect(section)?;
                let n: usize = parse_num(Some(count), l, section, "element count")?;
                let mut found = 0usize;
                loop {
                    let (l, line) = lines.expect(section)?;
                    if line == "$EndElements" {
                        break;
                    }
                    found += 1;
                    if found > n {
                        return Err(err(l, section, format!("declared {n} elements, found more")));
                    }
                    let mut it = line.split_whitespace();
                    let _id: u64 = parse_num(it.next(), l, section, "element id")?;
                    let kind: u32 = parse_num(it.next(), l, section, "element type")?;
                    let ntags: usize = parse_num(it.next(), l, section, "tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(parse_num::<i64>(it.next(), l, section, "tag")?);
                    }
                    let node_count = match kind {
                        1 => 2,
                        2 => 3,
                        15 => 1,
                        other => {
                            return Err(err(l, section, format!("unsupported element type {other}")))
                        }
                    };
                    let mut ids = [0u64; 3];
                    for slot in ids.iter_mut().take(node_count) {
                        *slot = parse_num(it.next(), l, section, "element node")?;
                    }
                    if it.next().is_some() {
                        return Err(err(l, section, "too many fields for element type"));
                    }
                    match kind {
                        1 => {
                            let tag = tags.first().copied().unwrap_or(0);
                            if tag < 1 || tag > u32::MAX as i64 {
                                return Err(err(l, section, "line element needs a positive physical tag"));
                            }
                            lines_raw.push((l, [ids[0], ids[1]], tag as u32));
                        }
                        2 => triangles_raw.push((l, ids)),
                        _ => {}
                    }
                }
                if found != n {
                    return Err(err(lines.last, section, format!("declared {n} elements, found {found}")));
                }
                elements_seen = true;
            }
            other if other.starts_with('$') => {
                let name = &other[1..];
                let end = format!("$End{name}");
                loop {
                    let (_, line) = lines.expect(other)?;
                    if line == end {
                        break;
                    }
                }
            }
            other => return Err(err(lno, "file", format!("unexpected content {other:?}"))),
        }
    }

    let (ids, coords) = nodes.ok_or_else(|| err(lines.last, "$Nodes", "missing section"))?;
    if !elements_seen {
        return Err(err(lines.last, "$Elements", "missing section"));
    }
    let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let lookup = |id: u64, line: usize| {
        index.get(&id).copied().ok_or_else(|| err(line, "$Elements", format!("unknown node {id}")))
    };

    // keep only triangle-referenced nodes, preserving file order
    let mut tri_raw = Vec::with_capacity(triangles_raw.len());
    let mut used = vec![false; ids.len()];
    for (line, tri) in &triangles_raw {
        let mut local = [0usize; 3];
        for (k, &id) in tri.iter().enumerate() {
            local[k] = lookup(id, *line)?;
            used[local[k]] = true;
        }
        tri_raw.push(local);
    }
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<[T; 2]> = Vec::new();
    for (raw, _) in used.iter().enumerate().filter(|(_, &u)| u) {
        remap.insert(raw, vertices.len());
        vertices.push([T::lit(coords[raw][0]), T::lit(coords[raw][1])]);
    }
    let mut triangles = Vec::with_capacity(tri_raw.len());
    for raw in tri_raw {
        let mut local = raw.map(|r| remap[&r]);
        let [a, b, c] = local.map(|i| vertices[i]);
        let area = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if area < T::zero() {
            local.swap(1, 2);
        }
        triangles.push(local);
    }
    let mut boundary = Vec::with_capacity(lines_raw.len());
    for (line, [a, b], tag) in &lines_raw {
        let map = |id: u64| -> Result<usize, MeshError> {
            let raw = lookup(id, *line)?;
            remap
                .get(&raw)
                .copied()
                .ok_or_else(|| err(*line, "$Elements", format!("line node {id} not on any triangle")))
        };
        boundary.push(BoundaryEdge { vertices: [map(*a)?, map(*b)?], tag: *tag });
    }
    TriMesh::new(vertices, triangles, boundary)
}

/// Serializes a mesh in the subset accepted by [`parse_gmsh`].
pub fn write_gmsh<T: Real>(mesh: &TriMesh<T>) -> String {
    let mut out = String::new();
    out.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(out, "{}", mesh.n_vertices());
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(out, "{} {:e} {:e} 0", i + 1, v[0].to_f64_lossy(), v[1].to_f64_lossy());
    }
    out.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(out, "{}", mesh.boundary_edges().len() + mesh.n_triangles());
    let mut id = 1;
    for be in mesh.boundary_edges() {
        let _ = writeln!(out, "{id} 1 2 {} {} {} {}", be.tag, be.tag, be.vertices[0] + 1, be.vertices[1] + 1);
        id += 1;
    }
    for tri in mesh.triangles() {
        let _ = writeln!(out, "{id} 2 2 0 1 {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1);
        id += 1;
    }
    out.push_str("$EndElements\n");
    out
}
