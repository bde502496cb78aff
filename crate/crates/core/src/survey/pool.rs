use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageCard {
    pub image_id: String,
    pub is_gender_stem: bool,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub path: Option<String>,
}

/// Shape of the instrument: pool size, fixed Gender-STEM images, images per session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolLayout {
    pub pool_size: usize,
    pub gender_stem: usize,
    pub per_session: usize,
}

impl Default for PoolLayout {
    fn default() -> Self {
        PoolLayout {
            pool_size: 100,
            gender_stem: 6,
            per_session: 20,
        }
    }
}

impl PoolLayout {
    pub fn sampled_per_session(&self) -> usize {
        self.per_session - self.gender_stem
    }
}

/// A validated image pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePool {
    cards: Vec<ImageCard>,
    layout: PoolLayout,
}

impl ImagePool {
    pub fn new(cards: Vec<ImageCard>) -> Result<Self> {
        Self::with_layout(cards, PoolLayout::default())
    }

    pub fn with_layout(cards: Vec<ImageCard>, layout: PoolLayout) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut dups = Vec::new();
        for c in &cards {
            if c.image_id.is_empty() {
                return Err(Error::validation("image with empty id in pool"));
            }
            if !seen.insert(c.image_id.as_str()) {
                dups.push(c.image_id.clone());
            }
        }
        if !dups.is_empty() {
            return Err(Error::validation(format!("duplicate image ids: {}", dups.join(", "))));
        }
        if cards.len() != layout.pool_size {
            return Err(Error::validation(format!(
                "pool has {} images, expected {}",
                cards.len(),
                layout.pool_size
            )));
        }
        let gender = cards.iter().filter(|c| c.is_gender_stem).count();
        if gender != layout.gender_stem {
            return Err(Error::validation(format!(
                "pool has {gender} Gender-STEM images, expected {}",
                layout.gender_stem
            )));
        }
        if layout.per_session < layout.gender_stem
            || layout.sampled_per_session() > layout.pool_size - layout.gender_stem
        {
            return Err(Error::validation("per-session image count does not fit the pool"));
        }
        Ok(ImagePool { cards, layout })
    }

    pub fn cards(&self) -> &[ImageCard] {
        &self.cards
    }

    pub fn layout(&self) -> PoolLayout {
        self.layout
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageCard> {
        self.cards.iter().find(|c| c.image_id == image_id)
    }

    pub fn gender_stem_ids(&self) -> impl Iterator<Item = &str> {
        self.cards
            .iter()
            .filter(|c| c.is_gender_stem)
            .map(|c| c.image_id.as_str())
    }

    pub fn other_ids(&self) -> impl Iterator<Item = &str> {
        self.cards
            .iter()
            .filter(|c| !c.is_gender_stem)
            .map(|c| c.image_id.as_str())
    }

    pub fn is_gender_stem(&self, image_id: &str) -> Option<bool> {
        self.get(image_id).map(|c| c.is_gender_stem)
    }
}

#[cfg(test)]
pub(crate) fn test_pool() -> ImagePool {
    let cards = (0..100)
        .map(|i| ImageCard {
            image_id: format!("img{i:03}"),
            is_gender_stem: i % 17 == 3 && i < 90,
            tags: vec![],
            path: None,
        })
        .collect();
    ImagePool::new(cards).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_pool_is_valid() {
        let p = test_pool();
        assert_eq!(p.gender_stem_ids().count(), 6);
        assert_eq!(p.other_ids().count(), 94);
    }

    #[test]
    fn rejects_duplicates_and_wrong_gender_count() {
        let mut cards = test_pool().cards().to_vec();
        cards[1].image_id = cards[0].image_id.clone();
        assert!(matches!(ImagePool::new(cards), Err(Error::Validation(m)) if m.contains("duplicate")));

        let mut cards = test_pool().cards().to_vec();
        for c in cards.iter_mut() {
            c.is_gender_stem = false;
        }
        assert!(ImagePool::new(cards).is_err());
    }
}
