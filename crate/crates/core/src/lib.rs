//! Multiparty file authorization over an untrusted store.
//!
//! A file is sealed with an involution cipher keyed by a secret `a0`, and
//! `a0` is split with a degree-2 polynomial over `Z_p` whose other
//! coefficients come from hashed owner attributes. Decryption requires the
//! organization server's point, the owner's point, and one authorized
//! receiver's point.
//!
//! ```
//! use invauth_core::{reconstruct_secret, FieldModulus, ReconstructionInput, SharePoint};
//!
//! let pts = vec![SharePoint::new(2, 1942), SharePoint::new(4, 3402), SharePoint::new(5, 4414)];
//! let input = ReconstructionInput::new(pts, FieldModulus::default());
//! assert_eq!(reconstruct_secret(&input).unwrap(), 1234);
//! ```

pub mod authz;
pub mod cipher;
pub mod example;
pub mod field;
pub mod hash;
pub mod interpolation;
pub mod keystream;
pub mod server;
pub mod sharing;
pub mod storage;

pub use authz::{
    AuthzError, FileGrant, GrantConfig, GrantOutcome, PolicyDb, SlotLayout, UserRecord, UserType, THRESHOLD,
};
pub use cipher::{
    decrypt_bytes, decrypt_symbol, derive_file_key, encrypt_bytes, encrypt_symbol, open_file, open_with_schedule,
    seal_file, seal_with_schedule, CipherEnvelope, CipherError, CipherKey, CipherMode, EnvelopeHeader, HEADER_LEN,
};
pub use example::{verify_worked_example, ExampleError, ExampleReport};
pub use field::{
    integer_nth_root, is_prime, mod_inverse, poly_eval, FieldError, FieldModulus, Profile, SecretPolynomial,
    DEFAULT_PRIME,
};
pub use hash::fnv1a64;
pub use interpolation::{
    lagrange_basis_at, reconstruct_polynomial, reconstruct_secret, verify_binding, InterpolationError,
    ReconstructionInput,
};
pub use keystream::{
    lcg_bits, monobit_check, xor_mask, KeystreamError, Lcg, LcgParams, MaskSchedule, MonobitStats, DEFAULT_BLOCK_BYTES,
};
pub use server::{OrgServer, ServerError};
pub use sharing::{
    binding_code, decrypt_share, derive_attribute_tokens, encrypt_share, split_secret, BindingCode, SharePoint,
    ShareRecord, SharingError,
};
pub use storage::{
    decode_envelope, encode_envelope, load_policy, object_key, save_policy, ObjectStore, Receipt, StorageError,
};
