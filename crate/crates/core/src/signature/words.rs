use crate::error::{Error, Result};

/// `Σ_{k=0}^{order} channels^k`, the length of a truncated signature.
pub fn signature_dimension(channels: usize, order: usize) -> Result<usize> {
    if channels == 0 {
        return Err(Error::InvalidArgument("channel count must be >= 1".into()));
    }
    let mut total: usize = 0;
    let mut power: usize = 1;
    for k in 0..=order {
        total = total.checked_add(power).ok_or_else(|| overflow(channels, order))?;
        if k < order {
            power = power.checked_mul(channels).ok_or_else(|| overflow(channels, order))?;
        }
    }
    Ok(total)
}

fn overflow(channels: usize, order: usize) -> Error {
    Error::DimensionOverflow(format!("signature with {channels} channels and order {order}"))
}

/// Flat position of the first word of `level`.
pub fn level_offset(channels: usize, level: usize) -> usize {
    if level == 0 {
        0
    } else {
        signature_dimension(channels, level - 1).expect("level offset within a valid dimension")
    }
}

/// A word `(i_1, ..., i_k)` together with its position in the stacked signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WordIndex {
    pub letters: Vec<usize>,
    pub flat_offset: usize,
}

impl WordIndex {
    pub fn new(channels: usize, letters: &[usize]) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l >= channels) {
            return Err(Error::InvalidArgument(format!(
                "letter {bad} outside channel range 0..{channels}"
            )));
        }
        let within = letters.iter().fold(0usize, |acc, &l| acc * channels + l);
        Ok(Self { letters: letters.to_vec(), flat_offset: level_offset(channels, letters.len()) + within })
    }

    pub fn empty() -> Self {
        Self { letters: Vec::new(), flat_offset: 0 }
    }

    /// Inverse of the flat layout.
    pub fn from_offset(channels: usize, offset: usize) -> Self {
        let mut level = 0;
        while level_offset(channels, level + 1) <= offset {
            level += 1;
        }
        let mut within = offset - level_offset(channels, level);
        let mut letters = vec![0; level];
        for slot in letters.iter_mut().rev() {
            *slot = within % channels;
            within /= channels;
        }
        Self { letters, flat_offset: offset }
    }

    pub fn level(&self) -> usize {
        self.letters.len()
    }
}

/// All words up to `order`, in flat order.
pub fn words(channels: usize, order: usize) -> impl Iterator<Item = WordIndex> {
    let n = signature_dimension(channels, order).expect("dimension fits in usize");
    (0..n).map(move |o| WordIndex::from_offset(channels, o))
}
