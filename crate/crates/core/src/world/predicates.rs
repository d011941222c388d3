use super::{WorldState, TABLE};
use crate::pddl::{Atom, SymbolicState};

/// Symbolic view of the geometry: `holding`/`handempty`, `on`/`in` from
/// footprint containment, and `at-scene` for the current location.
pub fn extract_predicates(w: &WorldState) -> SymbolicState {
    let mut s = SymbolicState::default();
    s.atoms.insert(Atom::new("at-scene", [w.location.as_str()]));
    match &w.held {
        Some(h) => {
            s.atoms.insert(Atom::new("holding", [h.as_str()]));
        }
        None => {
            s.atoms.insert(Atom::new::<&str>("handempty", []));
        }
    }
    for o in &w.objects {
        if w.is_held(&o.name) {
            continue;
        }
        match w.receptacle_at(o.position) {
            Some(r) => {
                s.atoms
                    .insert(Atom::new("on", [o.name.as_str(), r.name.as_str()]));
                s.atoms
                    .insert(Atom::new("in", [o.name.as_str(), r.name.as_str()]));
            }
            None => {
                s.atoms.insert(Atom::new("on", [o.name.as_str(), TABLE]));
            }
        }
    }
    s
}
