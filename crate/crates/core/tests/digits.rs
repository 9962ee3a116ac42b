use decohist_core::digits::{bbp_hex_digit, pi_fraction_bits, DigitSource};
use decohist_core::DigitStream;

#[test]
fn bbp_and_binary_splitting_agree() {
    let positions = [0u64, 1, 100, 1_000, 9_999, 50_000, 123_456];
    let bits = pi_fraction_bits(4 * 123_460);
    for &p in &positions {
        let i = 4 * p as usize;
        let nib = bits[i..i + 4].iter().fold(0u8, |a, &b| 2 * a + b);
        assert_eq!(nib, bbp_hex_digit(p), "hex position {p}");
    }
}

#[test]
fn pi_stream_reads_the_expansion() {
    let s = DigitStream::pi();
    assert!(matches!(s.source(), DigitSource::Pi));
    // 0x24 = 0010 0100
    assert_eq!(s.bits(0, 8).unwrap(), vec![0, 0, 1, 0, 0, 1, 0, 0]);
    assert_eq!(s.capacity(), None);
}

#[test]
fn file_stream_round_trip() {
    let dir = std::env::temp_dir().join(format!("decohist-digits-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bits.bin");
    std::fs::write(&path, [0xF0u8, 0x0F]).unwrap();
    let mut s = DigitStream::from_file(&path).unwrap();
    assert_eq!(s.capacity(), Some(16));
    assert_eq!(s.take(12).unwrap(), vec![1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
    s.seek(14);
    assert_eq!(s.take(2).unwrap(), vec![1, 1]);
    assert!(s.take(1).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}
