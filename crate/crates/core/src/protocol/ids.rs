use std::fmt;

use serde::{Deserialize, Serialize};

/// Network-wide 16-bit entity address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u16);

/// Address of the central credential server.
pub const CENTRAL_SERVER: EntityId = EntityId(0);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u16> for EntityId {
    fn from(v: u16) -> Self {
        EntityId(v)
    }
}
