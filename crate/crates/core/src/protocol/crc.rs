//! CRC-16/CCITT-FALSE: polynomial 0x1021, initial value 0xFFFF, no
//! reflection, no final XOR.

const POLY: u16 = 0x1021;

pub fn crc16(data: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &byte in data {
        crc ^= (byte as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ POLY
            } else {
                crc << 1
            };
        }
    }
    crc
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Polynomial long division over GF(2) on the augmented message, with
    /// the 0xFFFF preset applied to the first 16 message bits.
    fn long_division(data: &[u8]) -> u16 {
        let mut bits: Vec<u8> = data
            .iter()
            .flat_map(|b| (0..8).rev().map(move |k| (b >> k) & 1))
            .collect();
        for b in bits.iter_mut().take(16) {
            *b ^= 1;
        }
        bits.extend([0; 16]);
        let divisor: Vec<u8> = (0..17).rev().map(|k| ((0x1_1021u32 >> k) & 1) as u8).collect();
        for i in 0..bits.len() - 16 {
            if bits[i] == 1 {
                for (j, d) in divisor.iter().enumerate() {
                    bits[i + j] ^= d;
                }
            }
        }
        bits[bits.len() - 16..]
            .iter()
            .fold(0u16, |acc, &b| (acc << 1) | b as u16)
    }

    #[test]
    fn standard_check_value() {
        assert_eq!(long_division(b"123456789"), 0x29B1);
        assert_eq!(crc16(b"123456789"), 0x29B1);
    }

    #[test]
    fn agrees_with_long_division() {
        for len in 2..40u8 {
            let data: Vec<u8> = (0..len).map(|i| i.wrapping_mul(37).wrapping_add(len)).collect();
            assert_eq!(crc16(&data), long_division(&data), "len {len}");
        }
    }

    #[test]
    fn detects_every_single_bit_flip() {
        let data = b"sensor reading 0042".to_vec();
        let good = crc16(&data);
        for bit in 0..data.len() * 8 {
            let mut d = data.clone();
            d[bit / 8] ^= 0x80 >> (bit % 8);
            assert_ne!(crc16(&d), good);
        }
    }
}
