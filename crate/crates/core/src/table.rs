//! Dense storage for per-link `[j][l][k]` and per-user `[j][k]` quantities.

use alloc::vec::Vec;

/// Values indexed by (serving cell `j`, user cell `l`, user `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable<T> {
    cells: usize,
    users: usize,
    data: Vec<T>,
}

impl<T> LinkTable<T> {
    pub fn from_fn(cells: usize, users: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(cells * cells * users);
        for j in 0..cells {
            for l in 0..cells {
                for k in 0..users {
                    data.push(f(j, l, k));
                }
            }
        }
        Self { cells, users, data }
    }

    pub fn try_from_fn<E>(
        cells: usize,
        users: usize,
        mut f: impl FnMut(usize, usize, usize) -> Result<T, E>,
    ) -> Result<Self, E> {
        let mut data = Vec::with_capacity(cells * cells * users);
        for j in 0..cells {
            for l in 0..cells {
                for k in 0..users {
                    data.push(f(j, l, k)?);
                }
            }
        }
        Ok(Self { cells, users, data })
    }

    /// Builds a table from row-major `[j][l][k]` data.
    pub fn from_vec(cells: usize, users: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == cells * cells * users).then_some(Self { cells, users, data })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users(&self) -> usize {
        self.users
    }

    #[inline]
    pub fn get(&self, j: usize, l: usize, k: usize) -> &T {
        debug_assert!(j < self.cells && l < self.cells && k < self.users);
        &self.data[(j * self.cells + l) * self.users + k]
    }

    #[inline]
    pub fn get_mut(&mut self, j: usize, l: usize, k: usize) -> &mut T {
        debug_assert!(j < self.cells && l < self.cells && k < self.users);
        &mut self.data[(j * self.cells + l) * self.users + k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> LinkTable<U> {
        LinkTable {
            cells: self.cells,
            users: self.users,
            data: self.data.iter().map(&mut f).collect(),
        }
    }
}

/// Values indexed by (cell `j`, user `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct UserTable<T> {
    cells: usize,
    users: usize,
    data: Vec<T>,
}

impl<T> UserTable<T> {
    pub fn from_fn(cells: usize, users: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(cells * users);
        for j in 0..cells {
            for k in 0..users {
                data.push(f(j, k));
            }
        }
        Self { cells, users, data }
    }

    pub fn try_from_fn<E>(
        cells: usize,
        users: usize,
        mut f: impl FnMut(usize, usize) -> Result<T, E>,
    ) -> Result<Self, E> {
        let mut data = Vec::with_capacity(cells * users);
        for j in 0..cells {
            for k in 0..users {
                data.push(f(j, k)?);
            }
        }
        Ok(Self { cells, users, data })
    }

    pub fn from_vec(cells: usize, users: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == cells * users).then_some(Self { cells, users, data })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users(&self) -> usize {
        self.users
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> &T {
        debug_assert!(j < self.cells && k < self.users);
        &self.data[j * self.users + k]
    }

    #[inline]
    pub fn get_mut(&mut self, j: usize, k: usize) -> &mut T {
        debug_assert!(j < self.cells && k < self.users);
        &mut self.data[j * self.users + k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> UserTable<U> {
        UserTable {
            cells: self.cells,
            users: self.users,
            data: self.data.iter().map(&mut f).collect(),
        }
    }
}

impl<T: Clone> UserTable<T> {
    pub fn filled(cells: usize, users: usize, value: T) -> Self {
        Self { cells, users, data: alloc::vec![value; cells * users] }
    }
}

impl<T: Clone> LinkTable<T> {
    pub fn filled(cells: usize, users: usize, value: T) -> Self {
        Self { cells, users, data: alloc::vec![value; cells * cells * users] }
    }
}
