use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::VideoMeta;

/// Videos of one course, kept in registration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<VideoMeta>", into = "Vec<VideoMeta>")]
pub struct Catalog {
    videos: Vec<VideoMeta>,
    index: HashMap<String, usize>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, video_id: &str) -> Option<&VideoMeta> {
        self.index.get(video_id).map(|&i| &self.videos[i])
    }

    pub fn contains(&self, video_id: &str) -> bool {
        self.index.contains_key(video_id)
    }

    /// Inserts or replaces a video by id.
    pub fn insert(&mut self, video: VideoMeta) {
        match self.index.get(&video.video_id) {
            Some(&i) => self.videos[i] = video,
            None => {
                self.index.insert(video.video_id.clone(), self.videos.len());
                self.videos.push(video);
            }
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, VideoMeta> {
        self.videos.iter()
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }
}

impl From<Vec<VideoMeta>> for Catalog {
    fn from(videos: Vec<VideoMeta>) -> Self {
        let mut c = Catalog::new();
        for v in videos {
            c.insert(v);
        }
        c
    }
}

impl From<Catalog> for Vec<VideoMeta> {
    fn from(c: Catalog) -> Self {
        c.videos
    }
}

impl FromIterator<VideoMeta> for Catalog {
    fn from_iter<I: IntoIterator<Item = VideoMeta>>(iter: I) -> Self {
        iter.into_iter().collect::<Vec<_>>().into()
    }
}

impl<'a> IntoIterator for &'a Catalog {
    type Item = &'a VideoMeta;
    type IntoIter = std::slice::Iter<'a, VideoMeta>;

    fn into_iter(self) -> Self::IntoIter {
        self.videos.iter()
    }
}
