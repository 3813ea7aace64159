//! RLWE keys, encryption, keyswitching and key-switched ring operations.

mod ciphertext;
mod encrypt;
mod gadget;
mod keys;
mod keyswitch;
mod ops;

pub use ciphertext::{Ciphertext, Domain};
pub use encrypt::{decrypt, encrypt_pk, encrypt_sk};
pub use gadget::{balanced_digits, Digit, Gadget, SubDigit};
pub use keys::{keygen, PublicKey, SecretKey};
pub use keyswitch::{switch_key, switch_key_gen, SwitchingKey};
pub use ops::{
    apply_galois, embedded_secret, galois_key_gen, merge_key_gen, relin_key_gen, relinearize, ring_merge, ring_split,
    split_key_gen, GaloisKeys, MergeTree,
};
