use crate::error::{Error, Result};

fn check(predictions: &[usize], labels: &[usize]) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::Data("no predictions to score".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    Ok(())
}

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    check(predictions, labels)?;
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Counts with rows indexed by predicted class and columns by true class.
pub fn confusion_counts(predictions: &[usize], labels: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    check(predictions, labels)?;
    let mut m = vec![vec![0; classes]; classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= classes || l >= classes {
            return Err(Error::Label(format!("class index beyond {classes} classes")));
        }
        m[p][l] += 1;
    }
    Ok(m)
}

/// Row-normalized confusion matrix (rows = predicted, columns = true).
/// Rows without any prediction stay zero.
pub fn confusion(predictions: &[usize], labels: &[usize], classes: usize) -> Result<Vec<Vec<f64>>> {
    Ok(confusion_counts(predictions, labels, classes)?
        .into_iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.into_iter()
                .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect())
}
