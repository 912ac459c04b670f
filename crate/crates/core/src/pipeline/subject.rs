use crate::error::{Error, Result};
use crate::volume::Volume;

/// Tissue classes in label order.
pub const CLASS_NAMES: [&str; 4] = ["background", "CSF", "GM", "WM"];
pub const NUM_CLASSES: usize = CLASS_NAMES.len();

/// One subject: co-registered T1-like and T2-like images, a foreground mask
/// and, when known, tissue labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub id: String,
    pub t1: Volume<f32>,
    pub t2: Volume<f32>,
    pub labels: Option<Volume<u8>>,
    pub mask: Volume<u8>,
}

impl Subject {
    pub fn new(
        id: impl Into<String>,
        t1: Volume<f32>,
        t2: Volume<f32>,
        labels: Option<Volume<u8>>,
        mask: Volume<u8>,
    ) -> Result<Self> {
        let id = id.into();
        t1.check_same_grid(&t2, &format!("subject {id}: t1 vs t2"))?;
        t1.check_same_grid(&mask, &format!("subject {id}: t1 vs mask"))?;
        if let Some(labels) = &labels {
            t1.check_same_grid(labels, &format!("subject {id}: t1 vs labels"))?;
            if let Some(&bad) = labels.data().iter().find(|&&l| l as usize >= NUM_CLASSES) {
                return Err(Error::Data(format!("subject {id}: label {bad} is not a tissue class")));
            }
        }
        Ok(Self { id, t1, t2, labels, mask })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.t1.dims()
    }

    pub fn mask_count(&self) -> usize {
        self.mask.data().iter().filter(|&&m| m != 0).count()
    }

    pub fn labels(&self) -> Result<&Volume<u8>> {
        self.labels
            .as_ref()
            .ok_or_else(|| Error::Data(format!("subject {} has no labels", self.id)))
    }
}

fn normalize(image: &Volume<f32>, mask: &Volume<u8>, what: &str) -> Result<Volume<f32>> {
    let inside = || image.data().iter().zip(mask.data()).filter(|(_, &m)| m != 0).map(|(&v, _)| v as f64);
    let n = inside().count();
    if n == 0 {
        return Err(Error::Data(format!("{what}: mask is empty")));
    }
    let mean = inside().sum::<f64>() / n as f64;
    let var = inside().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Data(format!("{what}: zero intensity variance under the mask")));
    }
    let std = var.sqrt();
    let data = image
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&v, &m)| if m != 0 { ((v as f64 - mean) / std) as f32 } else { 0.0 })
        .collect();
    image.like(data)
}

/// Shifts and scales each modality to zero mean and unit variance over the
/// mask; voxels outside the mask become 0.
pub fn normalize_intensities(subject: &Subject) -> Result<Subject> {
    Ok(Subject {
        t1: normalize(&subject.t1, &subject.mask, &format!("subject {} t1", subject.id))?,
        t2: normalize(&subject.t2, &subject.mask, &format!("subject {} t2", subject.id))?,
        ..subject.clone()
    })
}
