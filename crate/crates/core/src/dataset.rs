//! Pixel-CSV ingestion, train/test splitting, IID client partitioning,
//! mini-batching and a synthetic surrogate generator.
//!
//! The CSV format is `pixel0000,…,pixelNNNN,label` with one image per row.
//! Values may be pre-scaled to `[0, 1]` or raw 0–255 greyscale; any value
//! above 1.0 switches the loader to dividing the whole matrix by 255.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::Batch;
use crate::rng;

/// Short names of the seven HAM10000 lesion classes, in label order.
pub const LESION_CLASSES: [&str; 7] = ["nv", "mel", "bkl", "bcc", "akiec", "vasc", "df"];

/// Pixels per 28×28 greyscale image.
pub const IMAGE_PIXELS: usize = 784;

/// Normalized class supports of the held-out split of the skin-lesion data
/// (61, 96, 228, 37, 1327, 32, 222 out of 2003).
pub const LESION_CLASS_WEIGHTS: [f64; 7] = [
    61.0 / 2003.0,
    96.0 / 2003.0,
    228.0 / 2003.0,
    37.0 / 2003.0,
    1327.0 / 2003.0,
    32.0 / 2003.0,
    222.0 / 2003.0,
];

/// Feature rows in `[0, 1]` with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::InvalidData(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if class_names.len() < 2 {
            return Err(Error::InvalidData("need at least two classes".into()));
        }
        if let Some((row, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l >= class_names.len())
        {
            return Err(Error::LabelOutOfRange {
                row,
                label: label as i64,
                num_classes: class_names.len(),
            });
        }
        for ((row, column), &value) in features.indexed_iter() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ValueOutOfRange { row, column, value });
            }
        }
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    /// A dataset over the seven lesion classes.
    pub fn lesions(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        Self::new(features, labels, lesion_class_names())
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same features with a replacement label vector.
    pub(crate) fn with_labels(&self, labels: Vec<usize>) -> Self {
        debug_assert_eq!(labels.len(), self.labels.len());
        Self {
            features: self.features.clone(),
            labels,
            class_names: self.class_names.clone(),
        }
    }

    /// Number of rows per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Writes the dataset in the pixel-CSV format read by [`load_csv`].
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(File::create(path)?);
        self.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let header: Vec<String> = (0..self.num_features())
            .map(pixel_column)
            .chain(std::iter::once("label".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for (row, &label) in self.features.rows().into_iter().zip(&self.labels) {
            line.clear();
            for v in row {
                // `{}` prints the shortest string that parses back to the same f64.
                line.push_str(&format!("{v},"));
            }
            line.push_str(&label.to_string());
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

fn lesion_class_names() -> Vec<String> {
    LESION_CLASSES.iter().map(|s| s.to_string()).collect()
}

fn pixel_column(i: usize) -> String {
    format!("pixel{i:04}")
}

/// One client's private training data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientShard {
    pub client_id: usize,
    pub data: LabeledDataset,
}

impl ClientShard {
    pub fn new(client_id: usize, data: LabeledDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidData(format!(
                "client {client_id} has no data"
            )));
        }
        Ok(Self { client_id, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Reads a pixel CSV over the seven lesion classes.
pub fn load_csv(path: &Path) -> Result<LabeledDataset> {
    let file = File::open(path).map_err(|source| Error::MissingFile {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    let width = header.len();
    if width < 2 || &header[width - 1] != "label" {
        return Err(Error::BadHeader("last column must be `label`".into()));
    }
    let pixels = width - 1;
    for (i, name) in header.iter().take(pixels).enumerate() {
        if name != pixel_column(i) {
            return Err(Error::BadHeader(format!(
                "column {i} is `{name}`, expected `{}`",
                pixel_column(i)
            )));
        }
    }

    let num_classes = LESION_CLASSES.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut record = csv::StringRecord::new();
    // Data rows are numbered from 1; the header is row 0.
    let mut row = 0;
    while rdr.read_record(&mut record)? {
        row += 1;
        if record.len() != width {
            return Err(Error::MalformedRow {
                row,
                expected: width,
                found: record.len(),
            });
        }
        for (i, cell) in record.iter().take(pixels).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                column: header[i].to_string(),
                value: cell.to_string(),
            })?;
            values.push(v);
        }
        let cell = &record[pixels];
        let label: i64 = cell.parse().map_err(|_| Error::NonNumeric {
            row,
            column: "label".into(),
            value: cell.to_string(),
        })?;
        if label < 0 || label as usize >= num_classes {
            return Err(Error::LabelOutOfRange {
                row,
                label,
                num_classes,
            });
        }
        labels.push(label as usize);
    }
    if labels.is_empty() {
        return Err(Error::InvalidData("CSV has no data rows".into()));
    }

    if values.iter().any(|&v| v > 1.0) {
        values.iter_mut().for_each(|v| *v /= 255.0);
    }
    if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::ValueOutOfRange {
            row: pos / pixels + 1,
            column: pos % pixels,
            value: values[pos],
        });
    }

    let features = Array2::from_shape_vec((labels.len(), pixels), values)
        .expect("row width checked while reading");
    LabeledDataset::lesions(features, labels)
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::rng(seed));
    idx
}

/// Shuffles rows by `seed` and holds out `round(n · test_fraction)` of them.
pub fn train_test_split(
    data: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n = data.len();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::DegenerateSplit(format!(
            "{n} rows with test fraction {test_fraction} leaves one side empty"
        )));
    }
    let idx = shuffled_indices(n, seed);
    let (test, train) = idx.split_at(n_test);
    Ok((data.select(train), data.select(test)))
}

/// Shuffles rows by `seed` and cuts them into `n_clients` contiguous chunks.
/// The first `n mod n_clients` shards receive one extra row.
pub fn partition_iid(
    train: &LabeledDataset,
    n_clients: usize,
    seed: u64,
) -> Result<Vec<ClientShard>> {
    let n = train.len();
    if n_clients == 0 || n_clients > n {
        return Err(Error::TooManyClients {
            rows: n,
            clients: n_clients,
        });
    }
    let idx = shuffled_indices(n, seed);
    let (base, extra) = (n / n_clients, n % n_clients);
    let mut start = 0;
    (0..n_clients)
        .map(|client_id| {
            let len = base + usize::from(client_id < extra);
            let shard = ClientShard::new(client_id, train.select(&idx[start..start + len]));
            start += len;
            shard
        })
        .collect()
}

/// Shuffles the shard by `epoch_seed` and groups it into batches of
/// `batch_size`; the final partial batch is kept.
pub fn batches(shard: &ClientShard, batch_size: usize, epoch_seed: u64) -> Result<Vec<Batch>> {
    dataset_batches(&shard.data, batch_size, epoch_seed)
}

pub(crate) fn dataset_batches(
    data: &LabeledDataset,
    batch_size: usize,
    epoch_seed: u64,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be >= 1".into()));
    }
    let idx = shuffled_indices(data.len(), epoch_seed);
    Ok(idx
        .chunks(batch_size)
        .map(|chunk| {
            let part = data.select(chunk);
            Batch::from_parts(part.features, part.labels)
        })
        .collect())
}

/// Parameters of the synthetic surrogate generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub class_weights: Vec<f64>,
    pub cluster_spread: f64,
    pub num_features: usize,
}

impl SynthSpec {
    pub fn new(n_samples: usize, class_weights: Vec<f64>, cluster_spread: f64) -> Result<Self> {
        let spec = Self {
            n_samples,
            class_weights,
            cluster_spread,
            num_features: IMAGE_PIXELS,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `n_samples` rows with the lesion class imbalance.
    pub fn lesion_like(n_samples: usize, cluster_spread: f64) -> Self {
        Self {
            n_samples,
            class_weights: LESION_CLASS_WEIGHTS.to_vec(),
            cluster_spread,
            num_features: IMAGE_PIXELS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.num_features == 0 {
            return Err(Error::InvalidConfig(
                "synthetic data needs rows and features".into(),
            ));
        }
        if self.class_weights.len() != LESION_CLASSES.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} class weights, got {}",
                LESION_CLASSES.len(),
                self.class_weights.len()
            )));
        }
        if self
            .class_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::InvalidConfig(
                "class weights must be finite and >= 0".into(),
            ));
        }
        let sum: f64 = self.class_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "class weights sum to {sum}, not 1"
            )));
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread >= 0.0) {
            return Err(Error::InvalidConfig(
                "cluster spread must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Draws one anchor point per class in `[0,1]^d`, then each sample as its
/// class anchor plus uniform noise of half-width `cluster_spread`, clipped to
/// `[0, 1]`. Class labels are i.i.d. draws from `class_weights`.
pub fn synth_dataset(spec: &SynthSpec, seed: u64) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = rng::rng(seed);
    let unit = Uniform::new_inclusive(0.0, 1.0);
    let anchors: Vec<Vec<f64>> = (0..spec.class_weights.len())
        .map(|_| {
            (0..spec.num_features)
                .map(|_| unit.sample(&mut rng))
                .collect()
        })
        .collect();
    let classes = WeightedIndex::new(&spec.class_weights)
        .map_err(|e| Error::InvalidConfig(format!("class weights: {e}")))?;
    let spread = spec.cluster_spread;
    let noise = (spread > 0.0).then(|| Uniform::new_inclusive(-spread, spread));

    let mut labels = Vec::with_capacity(spec.n_samples);
    let mut values = Vec::with_capacity(spec.n_samples * spec.num_features);
    for _ in 0..spec.n_samples {
        let c = classes.sample(&mut rng);
        labels.push(c);
        for &a in &anchors[c] {
            let v = match &noise {
                Some(n) => (a + n.sample(&mut rng)).clamp(0.0, 1.0),
                None => a,
            };
            values.push(v);
        }
    }
    let features = Array2::from_shape_vec((spec.n_samples, spec.num_features), values)
        .expect("buffer sized from spec");
    LabeledDataset::lesions(features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn header(width: usize) -> String {
        let mut cols: Vec<String> = (0..width).map(pixel_column).collect();
        cols.push("label".into());
        cols.join(",")
    }

    fn toy(n: usize, seed: u64) -> LabeledDataset {
        let spec = SynthSpec {
            n_samples: n,
            class_weights: LESION_CLASS_WEIGHTS.to_vec(),
            cluster_spread: 0.2,
            num_features: 3,
        };
        synth_dataset(&spec, seed).unwrap()
    }

    fn sorted(mut v: Vec<usize>) -> Vec<usize> {
        v.sort_unstable();
        v
    }

    #[test]
    fn loads_prescaled_rows_verbatim() {
        let mut csv = header(IMAGE_PIXELS);
        let first = [0.674510, 0.670588, 0.678431];
        for (r, lead) in [first.as_slice(), &[0.007843, 0.133333, 0.423529]]
            .iter()
            .enumerate()
        {
            csv.push('\n');
            let mut cells: Vec<String> = lead.iter().map(|v| v.to_string()).collect();
            cells.resize(IMAGE_PIXELS, "0.5".into());
            cells.push(r.to_string());
            csv.push_str(&cells.join(","));
        }
        let d = read_csv(Cursor::new(csv)).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.num_features(), IMAGE_PIXELS);
        assert_eq!(d.features()[[0, 0]], 0.674510);
        assert_eq!(d.features()[[0, 1]], 0.670588);
        assert_eq!(d.features()[[0, 2]], 0.678431);
        assert_eq!(d.features()[[1, 783]], 0.5);
        assert_eq!(d.labels(), &[0, 1]);
    }

    #[test]
    fn raw_greyscale_is_rescaled() {
        let mut cells = vec!["0".to_string(); IMAGE_PIXELS];
        cells[0] = "255".into();
        cells[1] = "51".into();
        let csv = format!("{}\n{},4\n", header(IMAGE_PIXELS), cells.join(","));
        let d = read_csv(Cursor::new(csv)).unwrap();
        assert_eq!(d.features()[[0, 0]], 1.0);
        assert_eq!(d.features()[[0, 1]], 0.2);
        assert_eq!(d.labels(), &[4]);
    }

    #[test]
    fn csv_errors_name_the_row() {
        let h = header(2);
        let err = read_csv(Cursor::new(format!("{h}\n0.1,0.2,0\n0.1,0\n"))).unwrap_err();
        assert!(matches!(
            err,
            Error::MalformedRow {
                row: 2,
                expected: 3,
                found: 2
            }
        ));

        let err = read_csv(Cursor::new(format!("{h}\n0.1,abc,0\n"))).unwrap_err();
        assert!(
            matches!(err, Error::NonNumeric { row: 1, ref column, .. } if column == "pixel0001")
        );

        let err = read_csv(Cursor::new(format!("{h}\n0.1,0.2,0\n0.1,0.2,7\n"))).unwrap_err();
        assert!(matches!(
            err,
            Error::LabelOutOfRange {
                row: 2,
                label: 7,
                ..
            }
        ));

        let err = read_csv(Cursor::new(format!("{h}\n0.1,-0.2,0\n"))).unwrap_err();
        assert!(matches!(
            err,
            Error::ValueOutOfRange {
                row: 1,
                column: 1,
                ..
            }
        ));

        let err = read_csv(Cursor::new("pixel0000,pixel0002,label\n0,0,0\n")).unwrap_err();
        assert!(matches!(err, Error::BadHeader(_)));

        let err = load_csv(Path::new("/definitely/not/here.csv")).unwrap_err();
        assert!(matches!(err, Error::MissingFile { .. }));
    }

    #[test]
    fn save_then_load_roundtrip() {
        let d = toy(40, 3);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = read_csv(Cursor::new(buf)).unwrap();
        assert_eq!(back.labels(), d.labels());
        for (a, b) in back.features().iter().zip(d.features()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn split_sizes() {
        let d = toy(10, 1);
        let (train, test) = train_test_split(&d, 0.2, 5).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(
            sorted([train.labels(), test.labels()].concat()),
            sorted(d.labels().to_vec())
        );
        assert_eq!(train_test_split(&d, 0.2, 5).unwrap(), (train, test));
        assert!(train_test_split(&d, 0.0, 5).is_err());
        assert!(train_test_split(&toy(2, 1), 0.1, 5).is_err());
    }

    #[test]
    fn split_of_full_lesion_size_holds_out_2003() {
        let n: usize = 10_015;
        assert_eq!((n as f64 * 0.2).round() as usize, 2003);
        let d = LabeledDataset::lesions(Array2::zeros((n, 1)), vec![0; n]).unwrap();
        let (train, test) = train_test_split(&d, 0.2, 0).unwrap();
        assert_eq!((train.len(), test.len()), (8012, 2003));
    }

    #[test]
    fn partition_sizes() {
        let sizes = |n, k| {
            partition_iid(&toy(n, 2), k, 9)
                .unwrap()
                .iter()
                .map(ClientShard::len)
                .collect::<Vec<_>>()
        };
        assert_eq!(sizes(100, 10), vec![10; 10]);
        let mut expected = vec![10; 10];
        expected[0] = 11;
        assert_eq!(sizes(101, 10), expected);
        assert!(matches!(
            partition_iid(&toy(3, 2), 4, 0),
            Err(Error::TooManyClients {
                rows: 3,
                clients: 4
            })
        ));
    }

    #[test]
    fn batch_sizes_and_permutation() {
        let shard = ClientShard::new(0, toy(70, 4)).unwrap();
        let b = batches(&shard, 32, 1).unwrap();
        assert_eq!(
            b.iter().map(Batch::len).collect::<Vec<_>>(),
            vec![32, 32, 6]
        );
        let single = batches(&shard, 100, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(
            sorted(single[0].labels().to_vec()),
            sorted(shard.data.labels().to_vec())
        );
        assert!(batches(&shard, 0, 1).is_err());
    }

    #[test]
    fn epoch_seeds_reorder_the_same_rows() {
        let shard = ClientShard::new(0, toy(50, 6)).unwrap();
        let rows = |seed| {
            let mut out: Vec<Vec<u64>> = batches(&shard, 8, seed)
                .unwrap()
                .iter()
                .flat_map(|b| {
                    b.features()
                        .rows()
                        .into_iter()
                        .zip(b.labels().to_vec())
                        .map(|(r, l)| r.iter().map(|v| v.to_bits()).chain([l as u64]).collect())
                        .collect::<Vec<Vec<u64>>>()
                })
                .collect();
            let order = out.clone();
            out.sort();
            (order, out)
        };
        let (order_a, set_a) = rows(1);
        let (order_b, set_b) = rows(2);
        assert_ne!(order_a, order_b);
        assert_eq!(set_a, set_b);
    }

    #[test]
    fn synth_zero_spread_is_degenerate() {
        let spec = SynthSpec::lesion_like(200, 0.0);
        let d = synth_dataset(&spec, 1).unwrap();
        for c in 0..7 {
            let rows: Vec<_> = (0..d.len()).filter(|&i| d.labels()[i] == c).collect();
            for w in rows.windows(2) {
                assert_eq!(d.features().row(w[0]), d.features().row(w[1]));
            }
        }
    }

    #[test]
    fn synth_histogram_within_binomial_bounds() {
        let d = synth_dataset(&SynthSpec::lesion_like(1000, 0.3), 17).unwrap();
        assert!(d.features().iter().all(|v| (0.0..=1.0).contains(v)));
        for (count, w) in d.class_counts().into_iter().zip(LESION_CLASS_WEIGHTS) {
            let mean = 1000.0 * w;
            let sd = (1000.0 * w * (1.0 - w)).sqrt();
            assert!((count as f64 - mean).abs() <= 4.0 * sd, "{count} vs {mean}");
        }
        assert_eq!(
            d,
            synth_dataset(&SynthSpec::lesion_like(1000, 0.3), 17).unwrap()
        );
    }

    #[test]
    fn lesion_weights_round_to_stated_values() {
        let stated = [0.0305, 0.0479, 0.1138, 0.0185, 0.6625, 0.0160, 0.1108];
        for (w, s) in LESION_CLASS_WEIGHTS.iter().zip(stated) {
            assert!((w - s).abs() < 5e-5);
        }
        assert!((LESION_CLASS_WEIGHTS.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(SynthSpec::new(10, vec![0.5; 7], 0.1).is_err());
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_and_exhaustive(n in 1usize..300, k in 1usize..40, seed: u64) {
            prop_assume!(k <= n);
            let ids: Vec<usize> = (0..n).collect();
            // Encode the row id in the single feature so shards can be traced back.
            let features = Array2::from_shape_fn((n, 1), |(i, _)| i as f64 / n as f64);
            let d = LabeledDataset::lesions(features, ids.iter().map(|i| i % 7).collect()).unwrap();
            let shards = partition_iid(&d, k, seed).unwrap();
            let mut seen: Vec<usize> = shards
                .iter()
                .flat_map(|s| s.data.features().column(0).iter().map(|v| (v * n as f64).round() as usize).collect::<Vec<_>>())
                .collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, ids);
            prop_assert!(shards.iter().all(|s| !s.is_empty()));
        }

        #[test]
        fn split_preserves_label_multiset(n in 2usize..200, frac in 0.05f64..0.95, seed: u64) {
            let d = toy(n, seed);
            if let Ok((train, test)) = train_test_split(&d, frac, seed) {
                prop_assert_eq!(train.len() + test.len(), n);
                prop_assert_eq!(sorted([train.labels(), test.labels()].concat()), sorted(d.labels().to_vec()));
            }
        }
    }
}
