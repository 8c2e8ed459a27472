use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use moms_core::chem::{monoisotopic_mass, parse_smiles_with_id, read_corpus, read_corpus_records, Molecule};
use moms_core::eval::{
    mean_spectrum, rank_candidates, score, Entry, PairScore, RankingReport, RankingTask, SimilarityReport,
};
use moms_core::hetero::build_graph;
use moms_core::model::{canonical_form, scaffold_split, spectrum_targets, train_with_vocabulary, MoMSModel, Variant};
use moms_core::motif::{mine_vocabulary, MotifVocabulary};
use moms_core::spectra::{bin_spectrum_with, normalize, parse_msp, write_msp, NormMode, PeakList, Spectrum};

use crate::config::RunConfig;
use crate::Exit;

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Exit::input(format!("{}: {e}", path.display())))?;
    Ok(BufReader::new(f))
}

pub fn load_corpus(path: &Path) -> Result<Vec<Molecule>> {
    read_corpus(open(path)?).with_context(|| format!("{}", path.display()))
}

pub fn load_msp(path: &Path) -> Result<Vec<PeakList>> {
    parse_msp(open(path)?).with_context(|| format!("{}", path.display()))
}

fn load_vocab(path: &Path) -> Result<MotifVocabulary> {
    MotifVocabulary::read(open(path)?).with_context(|| format!("{}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Ranks printed in the frequency-decay summary.
const DECAY_RANKS: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 300, 500];

pub fn mine(corpus: &Path, k: usize, out: &Path) -> Result<()> {
    let mols: Vec<Molecule> = load_corpus(corpus)?.iter().map(canonical_form).collect();
    if mols.is_empty() {
        return Err(Exit::input(format!("{}: corpus is empty", corpus.display())).into());
    }
    let vocab = mine_vocabulary(&mols, k)?;
    write_file(out, vocab.to_text())?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "motifs\t{}\tof\t{k}", vocab.len())?;
    writeln!(stdout, "merge_rounds\t{}", vocab.steps().len())?;
    writeln!(stdout, "rank\tfrequency\tsmiles")?;
    let entries = vocab.entries();
    for r in DECAY_RANKS.iter().copied().filter(|&r| r <= entries.len()) {
        let m = &entries[r - 1];
        writeln!(stdout, "{r}\t{}\t{}", m.frequency, m.smiles)?;
    }
    if let Some(last) = entries.last().filter(|_| !DECAY_RANKS.contains(&entries.len())) {
        writeln!(stdout, "{}\t{}\t{}", entries.len(), last.frequency, last.smiles)?;
    }
    Ok(())
}

pub fn build_graph_cmd(corpus: &Path, vocab_path: &Path, out: &Path) -> Result<()> {
    let mols: Vec<Molecule> = load_corpus(corpus)?.iter().map(canonical_form).collect();
    let vocab = load_vocab(vocab_path)?;
    let graph = build_graph(&mols, &vocab)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut edges = Vec::new();
    graph.write_edges(&mut edges)?;
    write_file(&out.join("edges.txt"), edges)?;
    let mut nodes = String::from("node\tkind\tlabel\n");
    for (i, id) in graph.molecule_ids().iter().enumerate() {
        nodes.push_str(&format!("{i}\tmolecule\t{id}\n"));
    }
    for (i, m) in vocab.entries().iter().enumerate() {
        nodes.push_str(&format!("{}\tmotif\t{}\n", graph.motif_node(i), m.smiles));
    }
    write_file(&out.join("nodes.tsv"), nodes)?;
    let manifest = graph.manifest(Some(&vocab_path.display().to_string()));
    write_file(
        &out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    println!(
        "nodes\t{}\nmolecules\t{}\nmotifs\t{}\nedges\t{}",
        manifest.n_nodes, manifest.n_molecules, manifest.n_motifs, manifest.n_edges
    );
    Ok(())
}

/// Library record for a predicted spectrum, basepeak scaled to 999.
fn predicted_record(id: &str, precursor: Option<f64>, s: &Spectrum) -> PeakList {
    let mut rec = match normalize(s, NormMode::Basepeak) {
        Ok(n) => n.to_peak_list(),
        Err(_) => {
            warn!("{id}: predicted spectrum is all zero");
            PeakList::default()
        }
    };
    rec.name = Some(id.to_string());
    rec.compound_id = Some(id.to_string());
    rec.precursor_mz = precursor;
    rec
}

pub fn train(config_path: &Path, variant: Option<Variant>) -> Result<()> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(v) = variant {
        cfg.model.variant = v;
    }
    let corpus = load_corpus(&cfg.corpus)?;
    let spectra = load_msp(&cfg.spectra)?;
    let vocab = cfg.vocab.as_deref().map(load_vocab).transpose()?;
    let targets =
        spectrum_targets(&spectra, cfg.model.m_max).with_context(|| format!("binning {}", cfg.spectra.display()))?;
    if let Some(m) = corpus.iter().find(|m| !targets.contains_key(&m.id)) {
        return Err(Exit::mismatch(format!("{}: no spectrum for molecule {}", cfg.spectra.display(), m.id)).into());
    }
    let split = scaffold_split(&corpus, cfg.model.split_fractions, cfg.model.seed)?;
    info!(
        "scaffold split: {} train, {} valid, {} test",
        split.train.len(),
        split.valid.len(),
        split.test.len()
    );
    let outcome = train_with_vocabulary(&corpus, &spectra, &split, &cfg.model, vocab)?;
    outcome.model.save(&cfg.checkpoint)?;

    let out = &cfg.output_dir;
    write_file(&out.join("split.json"), serde_json::to_string_pretty(&split)? + "\n")?;
    let mut log = String::new();
    for r in &outcome.log {
        log.push_str(&serde_json::to_string(r)?);
        log.push('\n');
    }
    write_file(&out.join("train_log.jsonl"), log)?;

    let by_id: HashMap<&str, &Molecule> = corpus.iter().map(|m| (m.id.as_str(), m)).collect();
    let by_key: HashMap<&str, &PeakList> = spectra.iter().filter_map(|p| p.key().map(|k| (k, p))).collect();
    let test: Vec<Molecule> = split.test.iter().map(|id| by_id[id.as_str()].clone()).collect();
    let preds = outcome
        .model
        .predict_batch(&test)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut pairs = Vec::new();
    let mut pred_records = Vec::new();
    for (m, p) in test.iter().zip(&preds) {
        pairs.push(PairScore {
            id: m.id.clone(),
            similarity: score(p, &targets[&m.id])?,
        });
        pred_records.push(predicted_record(&m.id, Some(monoisotopic_mass(m)), p));
    }
    let report = SimilarityReport::new(pairs);
    write_file(&out.join("test_predictions.msp"), write_msp(&pred_records))?;
    write_file(&out.join("eval.json"), serde_json::to_string_pretty(&report)? + "\n")?;

    // Library search inputs: measured test spectra as queries, predictions
    // for the test molecules plus measured train/valid spectra as references.
    let queries: Vec<PeakList> = split.test.iter().map(|id| by_key[id.as_str()].clone()).collect();
    let mut refs = pred_records;
    refs.extend(
        split
            .train
            .iter()
            .chain(&split.valid)
            .map(|id| by_key[id.as_str()].clone()),
    );
    write_file(&out.join("queries.msp"), write_msp(&queries))?;
    write_file(&out.join("references.msp"), write_msp(&refs))?;

    let known: Vec<Spectrum> = split
        .train
        .iter()
        .chain(&split.valid)
        .map(|id| targets[id].clone())
        .collect();
    let baseline = mean_spectrum(&known)?;
    let base_scores: Vec<f64> = split
        .test
        .iter()
        .map(|id| score(&baseline, &targets[id]))
        .collect::<Result<_, _>>()?;
    let base_mean = base_scores.iter().sum::<f64>() / base_scores.len().max(1) as f64;
    let best = &outcome.log[outcome.best_epoch - 1];

    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "variant\t{}", cfg.model.variant)?;
    writeln!(stdout, "epochs\t{}", outcome.log.len())?;
    writeln!(stdout, "best_epoch\t{}", outcome.best_epoch)?;
    writeln!(stdout, "train_loss\t{:.6}", best.train_loss)?;
    if let Some(v) = best.valid_similarity {
        writeln!(stdout, "valid_similarity\t{v:.6}")?;
    }
    writeln!(
        stdout,
        "test_similarity\t{:.6}\t{:.6}\t{}",
        report.stats.mean, report.stats.std, report.stats.n
    )?;
    writeln!(stdout, "mean_spectrum_baseline\t{base_mean:.6}")?;
    writeln!(stdout, "checkpoint\t{}", cfg.checkpoint.display())?;
    Ok(())
}

pub fn predict(checkpoint: &Path, input: &Path, out: &Path) -> Result<()> {
    let model = MoMSModel::load(checkpoint).with_context(|| format!("loading {}", checkpoint.display()))?;
    let records = read_corpus_records(open(input)?).with_context(|| format!("{}", input.display()))?;
    let mut mols = Vec::with_capacity(records.len());
    for r in &records {
        let m =
            parse_smiles_with_id(&r.smiles, &r.id).with_context(|| format!("{}: line {}", input.display(), r.line))?;
        mols.push(m);
    }
    let mut out_records = Vec::with_capacity(mols.len());
    for (m, p) in mols.iter().zip(model.predict_batch(&mols)) {
        let p = p.with_context(|| format!("predicting {}", m.id))?;
        out_records.push(predicted_record(&m.id, Some(monoisotopic_mass(m)), &p));
    }
    write_file(out, write_msp(&out_records))?;
    println!("predicted\t{}", out_records.len());
    Ok(())
}

fn keyed(records: &[PeakList], path: &Path) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let mut ids = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let Some(k) = r.key() else {
            return Err(Exit::input(format!("{}: record {} has no ID or Name", path.display(), i + 1)).into());
        };
        if !seen.insert(k.to_string()) {
            return Err(Exit::input(format!("{}: duplicate id {k}", path.display())).into());
        }
        ids.push(k.to_string());
    }
    Ok(ids)
}

fn binned(records: &[PeakList], m_max: usize, path: &Path) -> Result<Vec<Spectrum>> {
    records
        .iter()
        .map(|r| {
            bin_spectrum_with(r, m_max)
                .map_err(|e| Exit::input(format!("{}: {}: {e}", path.display(), r.key().unwrap_or("?"))).into())
        })
        .collect()
}

pub fn eval(pred: &Path, truth: &Path, m_max: usize, json: Option<&Path>) -> Result<()> {
    let p = load_msp(pred)?;
    let t = load_msp(truth)?;
    let p_ids = keyed(&p, pred)?;
    let t_ids = keyed(&t, truth)?;
    if p.len() != t.len() {
        return Err(Exit::mismatch(format!("{} predictions for {} reference spectra", p.len(), t.len())).into());
    }
    let p_bins = binned(&p, m_max, pred)?;
    let t_bins = binned(&t, m_max, truth)?;
    let index: HashMap<&str, usize> = p_ids.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let mut pairs = Vec::with_capacity(t.len());
    for (id, truth_s) in t_ids.iter().zip(&t_bins) {
        let Some(&i) = index.get(id.as_str()) else {
            return Err(Exit::mismatch(format!("no prediction for {id}")).into());
        };
        pairs.push(PairScore {
            id: id.clone(),
            similarity: score(&p_bins[i], truth_s)?,
        });
    }
    let report = SimilarityReport::new(pairs);
    if let Some(path) = json {
        write_file(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    print!("{}", report.summary());
    Ok(())
}

pub struct RankArgs {
    pub queries: PathBuf,
    pub refs: PathBuf,
    pub k: u32,
    pub precursor_window: Option<f64>,
    pub m_max: usize,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

fn entries(path: &Path, m_max: usize) -> Result<Vec<Entry>> {
    let records = load_msp(path)?;
    let ids = keyed(&records, path)?;
    let spectra = binned(&records, m_max, path)?;
    Ok(ids
        .into_iter()
        .zip(spectra)
        .zip(&records)
        .map(|((id, spectrum), r)| Entry {
            id,
            spectrum,
            precursor_mz: r.precursor_mz,
        })
        .collect())
}

pub fn rank(args: &RankArgs) -> Result<()> {
    let task = RankingTask {
        queries: entries(&args.queries, args.m_max)?,
        references: entries(&args.refs, args.m_max)?,
        precursor_window: args.precursor_window,
    };
    let report = RankingReport::new(rank_candidates(&task)?, args.k);
    if let Some(path) = &args.json {
        write_file(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    if let Some(path) = &args.svg {
        write_file(path, report.histogram_svg())?;
    }
    print!("{}", report.summary());
    Ok(())
}
