//! Segmentation of a sample stream into hop-sized frames.

/// One hop of time-domain input.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFrame {
    pub index: usize,
    pub samples: Vec<f64>,
}

/// Split `samples` into hop-sized frames. The final partial frame is
/// zero-padded and one extra all-zero flush frame is appended so the
/// decoder's overlap-add drains the last hop.
pub fn frame_stream(samples: &[f64], hop_n: usize) -> Vec<AudioFrame> {
    assert!(hop_n > 0);
    let mut frames = Vec::with_capacity(samples.len() / hop_n + 2);
    for (index, chunk) in samples.chunks(hop_n).enumerate() {
        let mut s = chunk.to_vec();
        s.resize(hop_n, 0.0);
        frames.push(AudioFrame { index, samples: s });
    }
    frames.push(AudioFrame {
        index: frames.len(),
        samples: vec![0.0; hop_n],
    });
    frames
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_full_hops_plus_flush() {
        let frames = frame_stream(&vec![1.0; 1024], 512);
        assert_eq!(frames.len(), 3);
        assert!(frames[2].samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn partial_frame_is_zero_padded() {
        let frames = frame_stream(&vec![1.0; 513], 512);
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[1].samples[0], 1.0);
        assert!(frames[1].samples[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_input_yields_one_flush_frame() {
        let frames = frame_stream(&[], 512);
        assert_eq!(frames.len(), 1);
        assert!(frames[0].samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn concatenation_reproduces_input() {
        let samples: Vec<f64> = (0..1300).map(|i| (i as f64).sin()).collect();
        let frames = frame_stream(&samples, 512);
        let cat: Vec<f64> = frames
            .iter()
            .flat_map(|f| f.samples.iter().copied())
            .collect();
        assert_eq!(&cat[..samples.len()], &samples[..]);
        assert!(cat[samples.len()..].iter().all(|&x| x == 0.0));
    }
}
