use super::{EmbeddingStore, OccurrenceEmbedding, Record, StoreError, FORMAT_VERSION, MAGIC};

/// Serializes a validated store into CASTEMB bytes.
pub fn encode_castemb(store: &EmbeddingStore) -> Result<Vec<u8>, StoreError> {
    store.validate()?;
    let dim = store.dim;
    let occ_bytes: usize = store
        .occurrences
        .iter()
        .map(|o| 12 + o.word.len() + 4 * dim)
        .sum();
    let mut out = Vec::with_capacity(32 + 4 * store.doc_embeddings.len() + occ_bytes);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(store.n_docs() as u64).to_le_bytes());
    out.extend_from_slice(&(store.occurrences.len() as u64).to_le_bytes());
    for x in &store.doc_embeddings {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for occ in &store.occurrences {
        out.extend_from_slice(&(occ.doc_id as u64).to_le_bytes());
        out.extend_from_slice(&(occ.word.len() as u32).to_le_bytes());
        out.extend_from_slice(occ.word.as_bytes());
        for x in &occ.vector {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: u64) -> Result<&'a [u8], StoreError> {
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n > remaining {
            return Err(StoreError::Truncated {
                offset: self.bytes.len() as u64,
                needed: n - remaining,
            });
        }
        let n = n as usize;
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, out: &mut Vec<f32>) -> Result<(), StoreError> {
        let raw = self.take(4 * n as u64)?;
        out.extend(
            raw.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap())),
        );
        Ok(())
    }
}

/// Parses and fully validates CASTEMB bytes.
pub fn decode_castemb(bytes: &[u8]) -> Result<EmbeddingStore, StoreError> {
    if !bytes.starts_with(MAGIC) {
        return Err(StoreError::BadMagic);
    }
    let mut r = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(StoreError::UnsupportedVersion(version));
    }
    let dim = r.u32()? as usize;
    if dim == 0 {
        return Err(StoreError::ZeroDimension);
    }
    let n_docs = r.u64()?;
    let n_occurrences = r.u64()?;

    let doc_bytes = n_docs
        .checked_mul(dim as u64 * 4)
        .ok_or(StoreError::Truncated {
            offset: bytes.len() as u64,
            needed: u64::MAX,
        })?;
    // `take` bounds-checks against the file before anything is allocated.
    let doc_embeddings: Vec<f32> = r
        .take(doc_bytes)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let n_docs = n_docs as usize;
    for i in 0..n_docs {
        super::check_unit_vector(&doc_embeddings[i * dim..(i + 1) * dim], Record::Document(i))?;
    }

    let mut occurrences = Vec::new();
    let mut previous = 0usize;
    for k in 0..n_occurrences {
        let record = Record::Occurrence(k as usize);
        let doc_id = r.u64()?;
        if doc_id >= n_docs as u64 {
            return Err(StoreError::UnknownDocument {
                record,
                doc_id,
                n_docs,
            });
        }
        let doc_id = doc_id as usize;
        if doc_id < previous {
            return Err(StoreError::OutOfOrder {
                record,
                doc_id,
                previous,
            });
        }
        previous = doc_id;
        let len = r.u32()? as u64;
        let word = std::str::from_utf8(r.take(len)?)
            .map_err(|_| StoreError::InvalidUtf8 { record })?
            .to_string();
        if word.is_empty() {
            return Err(StoreError::EmptyWord { record });
        }
        let mut vector = Vec::with_capacity(dim);
        r.f32s(dim, &mut vector)?;
        super::check_unit_vector(&vector, record)?;
        occurrences.push(OccurrenceEmbedding {
            word,
            doc_id,
            vector,
        });
    }
    if r.pos != bytes.len() {
        return Err(StoreError::TrailingBytes {
            offset: r.pos as u64,
            extra: (bytes.len() - r.pos) as u64,
        });
    }
    Ok(EmbeddingStore {
        dim,
        doc_embeddings,
        occurrences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_store() -> EmbeddingStore {
        let e = |i: usize| {
            let mut v = vec![0.0f32; 4];
            v[i] = 1.0;
            v
        };
        EmbeddingStore::new(
            4,
            vec![e(0), e(1)],
            vec![
                OccurrenceEmbedding {
                    word: "river".into(),
                    doc_id: 0,
                    vector: e(2),
                },
                OccurrenceEmbedding {
                    word: "bank".into(),
                    doc_id: 0,
                    vector: e(3),
                },
                OccurrenceEmbedding {
                    word: "bank".into(),
                    doc_id: 1,
                    vector: e(0),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_small_store() {
        let store = small_store();
        let bytes = encode_castemb(&store).unwrap();
        let back = decode_castemb(&bytes).unwrap();
        assert_eq!(back, store);
        assert_eq!(back.n_docs(), 2);
        assert_eq!(back.occurrences.len(), 3);
    }

    #[test]
    fn header_layout_is_fixed() {
        let bytes = encode_castemb(&small_store()).unwrap();
        assert_eq!(&bytes[0..8], b"CASTEMB1");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 4);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 3);
        // header + 2 docs + 3 occurrence records
        assert_eq!(bytes.len(), 32 + 2 * 16 + (12 + 5 + 16) + 2 * (12 + 4 + 16));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_castemb(&small_store()).unwrap();
        let cut = &bytes[..bytes.len() - 3];
        match decode_castemb(cut).unwrap_err() {
            StoreError::Truncated { offset, .. } => assert_eq!(offset, cut.len() as u64),
            other => panic!("unexpected {other:?}"),
        }
        assert!(decode_castemb(&bytes[..20]).is_err());
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_castemb(&small_store()).unwrap();
        bytes[8] = 2;
        assert!(matches!(
            decode_castemb(&bytes),
            Err(StoreError::UnsupportedVersion(2))
        ));
        bytes[0] = b'X';
        assert!(matches!(decode_castemb(&bytes), Err(StoreError::BadMagic)));
    }

    #[test]
    fn nan_is_reported_with_record() {
        let mut bytes = encode_castemb(&small_store()).unwrap();
        // first component of occurrence record 1 ("bank" in doc 0)
        let rec1 = 32 + 32 + (12 + 5 + 16);
        let at = rec1 + 12 + 4;
        bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = decode_castemb(&bytes).unwrap_err();
        assert_eq!(err.record(), Some(Record::Occurrence(1)));
    }

    #[test]
    fn nan_store_is_rejected_before_writing() {
        let mut store = small_store();
        store.occurrences[0].vector[0] = f32::NAN;
        assert!(matches!(
            encode_castemb(&store),
            Err(StoreError::NonFinite { .. })
        ));
    }

    #[test]
    fn empty_store_round_trips() {
        let store = EmbeddingStore {
            dim: 8,
            doc_embeddings: vec![],
            occurrences: vec![],
        };
        let back = decode_castemb(&encode_castemb(&store).unwrap()).unwrap();
        assert_eq!(back.n_docs(), 0);
        assert_eq!(back, store);
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = encode_castemb(&small_store()).unwrap();
        bytes.push(0);
        assert!(matches!(
            decode_castemb(&bytes),
            Err(StoreError::TrailingBytes { extra: 1, .. })
        ));
    }
}
