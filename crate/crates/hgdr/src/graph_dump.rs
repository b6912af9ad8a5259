//! Debug dump of a [`HeteroGraph`]: every value is a little-endian `u32`.
//!
//! ```text
//! num_users  num_domains  items[0] .. items[D-1]
//! for d in 0..D:
//!     IU(d) offsets (num_users + 1)   IU(d) indices (edges_d)
//!     UI(d) offsets (items[d] + 1)    UI(d) indices (edges_d)
//! ```
//! Edge counts are implied by the last offset of each block.

use std::io::{Read, Write};

use hgdr_core::graph::Csr;
use hgdr_core::HeteroGraph;

use crate::binio::{expect_eof, get_u32, get_u32s, put_len, put_u32};
use crate::FormatError;

pub fn write_graph<W: Write>(graph: &HeteroGraph, mut w: W) -> Result<(), FormatError> {
    put_len(&mut w, graph.num_users())?;
    put_len(&mut w, graph.num_domains())?;
    for &n in graph.items_per_domain() {
        put_len(&mut w, n)?;
    }
    for d in 0..graph.num_domains() {
        for csr in [graph.item_to_user(d), graph.user_to_item(d)] {
            for &x in csr.offsets.iter().chain(&csr.indices) {
                put_u32(&mut w, x)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_graph<R: Read>(mut r: R) -> Result<HeteroGraph, FormatError> {
    let users = get_u32(&mut r)? as usize;
    let nd = get_u32(&mut r)? as usize;
    let items: Vec<usize> = get_u32s(&mut r, nd)?.into_iter().map(|x| x as usize).collect();
    let mut iu = Vec::with_capacity(nd);
    let mut ui = Vec::with_capacity(nd);
    for &n_items in &items {
        iu.push(read_csr(&mut r, users)?);
        ui.push(read_csr(&mut r, n_items)?);
    }
    expect_eof(&mut r)?;
    Ok(HeteroGraph::from_csr(users, items, iu, ui)?)
}

fn read_csr<R: Read>(r: &mut R, targets: usize) -> Result<Csr, FormatError> {
    let offsets = get_u32s(r, targets + 1)?;
    let edges = *offsets.last().expect("at least one offset") as usize;
    let indices = get_u32s(r, edges)?;
    Ok(Csr { offsets, indices })
}
