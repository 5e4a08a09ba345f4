//! Built-in link table.

use super::Braid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkEntry {
    pub name: &'static str,
    pub braid: &'static str,
    pub knot: bool,
}

const TABLE: &[LinkEntry] = &[
    LinkEntry { name: "unknot", braid: "1:", knot: true },
    LinkEntry { name: "hopf+", braid: "2: 1 1", knot: false },
    LinkEntry { name: "hopf-", braid: "2: -1 -1", knot: false },
    LinkEntry { name: "trefoil-right", braid: "2: 1 1 1", knot: true },
    LinkEntry { name: "trefoil-left", braid: "2: -1 -1 -1", knot: true },
    LinkEntry { name: "figure-eight", braid: "3: 1 -2 1 -2", knot: true },
    LinkEntry { name: "T(2,4)", braid: "2: 1 1 1 1", knot: false },
    LinkEntry { name: "T(2,4)-mirror", braid: "2: -1 -1 -1 -1", knot: false },
    LinkEntry { name: "T(2,5)", braid: "2: 1 1 1 1 1", knot: true },
    LinkEntry { name: "T(2,5)-mirror", braid: "2: -1 -1 -1 -1 -1", knot: true },
    LinkEntry { name: "T(2,6)", braid: "2: (1)^6", knot: false },
    LinkEntry { name: "T(2,6)-mirror", braid: "2: (-1)^6", knot: false },
    LinkEntry { name: "T(2,7)", braid: "2: (1)^7", knot: true },
    LinkEntry { name: "T(2,7)-mirror", braid: "2: (-1)^7", knot: true },
    LinkEntry { name: "T(2,8)", braid: "2: (1)^8", knot: false },
    LinkEntry { name: "T(2,8)-mirror", braid: "2: (-1)^8", knot: false },
    LinkEntry { name: "T(3,4)", braid: "3: (1 2)^4", knot: true },
    LinkEntry { name: "T(3,4)-mirror", braid: "3: (-1 -2)^4", knot: true },
    LinkEntry { name: "5_2", braid: "3: 1 1 1 2 -1 2", knot: true },
    LinkEntry { name: "6_1", braid: "4: 1 1 2 -1 -3 2 -3", knot: true },
    LinkEntry { name: "borromean", braid: "3: (1 -2)^3", knot: false },
    LinkEntry { name: "whitehead", braid: "3: 1 1 -2 1 -2", knot: false },
];

pub fn table() -> &'static [LinkEntry] {
    TABLE
}

pub fn lookup(name: &str) -> Option<&'static LinkEntry> {
    TABLE.iter().find(|e| e.name == name)
}

impl LinkEntry {
    pub fn braid(&self) -> Braid {
        Braid::parse(self.braid).expect("table entries parse")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_parse_and_match_kind() {
        for e in table() {
            let b = e.braid();
            assert_eq!(b.components() == 1, e.knot, "{}", e.name);
            assert!(b.crossings() <= 8, "{}", e.name);
        }
        assert_eq!(lookup("whitehead").unwrap().braid().components(), 2);
    }
}
