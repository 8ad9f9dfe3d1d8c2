//! Policy engine for the four-participant protocol: registration, grant,
//! three-point decryption authorization, and revocation.
//!
//! Every path to plaintext reconstructs the file secret from exactly three
//! points: the organization server's share (held here), the owner's share
//! (held only by the owner), and one receiver's share (stored encrypted
//! under the receiver's credentials). The owner's share is never written
//! into the database.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cipher::{derive_file_key, open_file, seal_file, CipherEnvelope, CipherError, CipherMode};
use crate::field::FieldModulus;
use crate::interpolation::{reconstruct_polynomial, verify_binding, InterpolationError, ReconstructionInput};
use crate::keystream::DEFAULT_BLOCK_BYTES;
use crate::sharing::{
    binding_code, derive_attribute_tokens, sharing_polynomial, split_secret, BindingCode, SharePoint, ShareRecord,
    SharingError,
};
use crate::storage::object_key;

/// Server + owner + receiver.
pub const THRESHOLD: usize = 3;

const SALT_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthzError {
    #[error("user {0} is already registered")]
    DuplicateUser(String),
    #[error("user {0} is not registered")]
    UnknownUser(String),
    #[error("{0} is not a registered owner")]
    UnknownOwner(String),
    #[error("a grant needs at least one consumer")]
    NoConsumers,
    #[error("file {0} already has a grant")]
    FileExists(String),
    #[error("no grant for file {0}")]
    UnknownFile(String),
    #[error("user {user} is not granted access to {file_id}")]
    NotGranted { file_id: String, user: String },
    #[error("reconstructed key fails the binding check")]
    BindingMismatch,
    #[error("reconstruction needs server, owner and receiver points")]
    InsufficientPoints,
    #[error("point presented in the wrong role: {0}")]
    RoleViolation(&'static str),
    #[error("invalid slot layout: {0}")]
    InvalidLayout(&'static str),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    Interpolation(#[from] InterpolationError),
    #[error(transparent)]
    Cipher(#[from] CipherError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserType {
    Owner,
    Consumer,
    Server,
}

impl std::str::FromStr for UserType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "owner" => Ok(UserType::Owner),
            "consumer" => Ok(UserType::Consumer),
            "server" => Ok(UserType::Server),
            other => Err(format!("unknown user type {other:?}")),
        }
    }
}

impl UserType {
    pub fn as_str(self) -> &'static str {
        match self {
            UserType::Owner => "owner",
            UserType::Consumer => "consumer",
            UserType::Server => "server",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub user_type: UserType,
    #[serde(rename = "credentials_hex", with = "hex::serde")]
    pub credentials: Vec<u8>,
}

impl UserRecord {
    pub fn new(user_id: impl Into<String>, user_type: UserType, credentials: impl Into<Vec<u8>>) -> Self {
        Self {
            user_id: user_id.into(),
            user_type,
            credentials: credentials.into(),
        }
    }

    /// Attribute list feeding the coefficient tokens, credentials first.
    pub fn attributes(&self) -> [&[u8]; 3] {
        [
            &self.credentials,
            self.user_id.as_bytes(),
            self.user_type.as_str().as_bytes(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileGrant {
    pub file_id: String,
    pub owner_id: String,
    /// Abscissa reserved for the owner's point; the point itself is not stored.
    pub owner_x: u64,
    pub server_share: SharePoint,
    pub consumers: BTreeMap<String, ShareRecord>,
    pub kc: u64,
    pub x_kc: u64,
    #[serde(with = "hex::serde")]
    pub salt_hex: Vec<u8>,
    pub envelope_ref: String,
}

impl FileGrant {
    pub fn binding(&self) -> BindingCode {
        BindingCode {
            kc: self.kc,
            x_kc: self.x_kc,
        }
    }
}

/// Abscissae assigned to each role in a grant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLayout {
    pub server_x: u64,
    pub owner_x: u64,
    pub consumer_xs: Vec<u64>,
}

impl SlotLayout {
    /// Server at 1, owner at 2, consumers at 3, 4, ...
    pub fn conventional(consumers: usize) -> Self {
        Self {
            server_x: 1,
            owner_x: 2,
            consumer_xs: (3..3 + consumers as u64).collect(),
        }
    }

    fn all(&self) -> impl Iterator<Item = u64> + '_ {
        [self.server_x, self.owner_x]
            .into_iter()
            .chain(self.consumer_xs.iter().copied())
    }

    /// The slots must be exactly `1..=n` so they line up with the issued points.
    fn validate(&self, consumers: usize) -> Result<usize, AuthzError> {
        if self.consumer_xs.len() != consumers {
            return Err(AuthzError::InvalidLayout("one consumer slot per consumer"));
        }
        let n = consumers + 2;
        let set: BTreeSet<u64> = self.all().collect();
        if set.len() != n || set.iter().copied().ne(1..=n as u64) {
            return Err(AuthzError::InvalidLayout("slots must be exactly 1..=n"));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone)]
pub struct GrantConfig {
    pub mode: CipherMode,
    pub n: u8,
    pub block_bytes: u32,
    /// Fixed `(a0, [a1, a2])` instead of a fresh secret and attribute tokens.
    pub pinned: Option<(u64, Vec<u64>)>,
    pub layout: Option<SlotLayout>,
}

impl Default for GrantConfig {
    fn default() -> Self {
        Self {
            mode: CipherMode::Additive,
            n: 1,
            block_bytes: DEFAULT_BLOCK_BYTES,
            pinned: None,
            layout: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrantOutcome {
    pub envelope: CipherEnvelope,
    pub envelope_ref: String,
    /// Returned to the owner and never persisted.
    pub owner_share: SharePoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDb {
    pub p: FieldModulus,
    pub users: Vec<UserRecord>,
    pub grants: Vec<FileGrant>,
}

impl Default for PolicyDb {
    fn default() -> Self {
        Self::new(FieldModulus::default())
    }
}

impl PolicyDb {
    pub fn new(p: FieldModulus) -> Self {
        Self {
            p,
            users: Vec::new(),
            grants: Vec::new(),
        }
    }

    pub fn user(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.iter().find(|u| u.user_id == user_id)
    }

    pub fn grant(&self, file_id: &str) -> Option<&FileGrant> {
        self.grants.iter().find(|g| g.file_id == file_id)
    }

    fn grant_index(&self, file_id: &str) -> Result<usize, AuthzError> {
        self.grants
            .iter()
            .position(|g| g.file_id == file_id)
            .ok_or_else(|| AuthzError::UnknownFile(file_id.to_owned()))
    }

    /// Referential integrity: unique user ids, every grant's owner and
    /// consumers registered, no stored share at the owner's abscissa.
    pub fn check_integrity(&self) -> Result<(), String> {
        let mut ids = BTreeSet::new();
        for u in &self.users {
            if !ids.insert(u.user_id.as_str()) {
                return Err(format!("duplicate user {}", u.user_id));
            }
        }
        for g in &self.grants {
            if !ids.contains(g.owner_id.as_str()) {
                return Err(format!("grant {} names unknown owner {}", g.file_id, g.owner_id));
            }
            if g.server_share.x == g.owner_x {
                return Err(format!("grant {} stores a point at the owner slot", g.file_id));
            }
            for (uid, rec) in &g.consumers {
                if !ids.contains(uid.as_str()) {
                    return Err(format!("grant {} names unknown consumer {uid}", g.file_id));
                }
                if rec.x == g.owner_x || rec.x == g.server_share.x {
                    return Err(format!("grant {} has a consumer in a reserved slot", g.file_id));
                }
            }
        }
        Ok(())
    }

    pub fn register_user(&mut self, record: UserRecord) -> Result<(), AuthzError> {
        if self.user(&record.user_id).is_some() {
            return Err(AuthzError::DuplicateUser(record.user_id));
        }
        self.users.push(record);
        Ok(())
    }

    /// Seals `data`, splits the file secret into `consumers + 2` points, and
    /// records the server share, binding code and encrypted consumer shares.
    pub fn grant_access<R: Rng + ?Sized>(
        &mut self,
        file_id: &str,
        owner_id: &str,
        consumer_ids: &[&str],
        data: &[u8],
        config: &GrantConfig,
        rng: &mut R,
    ) -> Result<GrantOutcome, AuthzError> {
        if self.grant(file_id).is_some() {
            return Err(AuthzError::FileExists(file_id.to_owned()));
        }
        let owner = self
            .user(owner_id)
            .filter(|u| u.user_type == UserType::Owner)
            .ok_or_else(|| AuthzError::UnknownOwner(owner_id.to_owned()))?
            .clone();
        if consumer_ids.is_empty() {
            return Err(AuthzError::NoConsumers);
        }
        let mut consumers = Vec::with_capacity(consumer_ids.len());
        for &id in consumer_ids {
            let user = self.user(id).ok_or_else(|| AuthzError::UnknownUser(id.to_owned()))?;
            if id == owner_id || consumers.iter().any(|c: &UserRecord| c.user_id == id) {
                return Err(AuthzError::InvalidLayout(
                    "consumers must be distinct and exclude the owner",
                ));
            }
            consumers.push(user.clone());
        }
        let layout = config
            .layout
            .clone()
            .unwrap_or_else(|| SlotLayout::conventional(consumers.len()));
        let n_points = layout.validate(consumers.len())?;

        let p = self.p;
        let salt: [u8; SALT_LEN] = rng.gen();
        let (secret, coeffs) = match &config.pinned {
            Some((secret, coeffs)) => (*secret, coeffs.clone()),
            None => (
                rng.gen_range(0..p.value()),
                derive_attribute_tokens(&owner.attributes(), &salt, THRESHOLD, p)?,
            ),
        };
        if coeffs.len() != THRESHOLD - 1 {
            return Err(AuthzError::InvalidLayout("protocol threshold is 3"));
        }
        let points = split_secret(secret, &coeffs, n_points, p)?;
        let poly = sharing_polynomial(secret, &coeffs, p)?;
        let binding = binding_code(secret, &poly, file_id.as_bytes());
        let point_at = |x: u64| points[(x - 1) as usize];

        let key = derive_file_key(secret, file_id.as_bytes(), config.mode, config.n)?;
        let envelope = seal_file(data, &key, config.block_bytes)?;
        let envelope_ref = object_key(file_id, 1);

        let records = consumers
            .iter()
            .zip(&layout.consumer_xs)
            .map(|(user, &x)| {
                let rec = ShareRecord::seal(file_id, point_at(x), binding, &user.credentials, p);
                (user.user_id.clone(), rec)
            })
            .collect();
        self.grants.push(FileGrant {
            file_id: file_id.to_owned(),
            owner_id: owner_id.to_owned(),
            owner_x: layout.owner_x,
            server_share: point_at(layout.server_x),
            consumers: records,
            kc: binding.kc,
            x_kc: binding.x_kc,
            salt_hex: salt.to_vec(),
            envelope_ref: envelope_ref.clone(),
        });
        Ok(GrantOutcome {
            envelope,
            envelope_ref,
            owner_share: point_at(layout.owner_x),
        })
    }

    /// Role checks, three-point reconstruction, and the binding check.
    /// Returns the file secret on success.
    pub fn authorize_triple(
        &self,
        file_id: &str,
        server_point: SharePoint,
        owner_point: Option<SharePoint>,
        receiver_id: &str,
        receiver_point: Option<SharePoint>,
    ) -> Result<u64, AuthzError> {
        let grant = &self.grants[self.grant_index(file_id)?];
        let slot = grant
            .consumers
            .get(receiver_id)
            .ok_or_else(|| AuthzError::NotGranted {
                file_id: file_id.to_owned(),
                user: receiver_id.to_owned(),
            })?
            .x;
        let (Some(owner_point), Some(receiver_point)) = (owner_point, receiver_point) else {
            return Err(AuthzError::InsufficientPoints);
        };
        if server_point != grant.server_share {
            return Err(AuthzError::RoleViolation(
                "server point does not match the stored share",
            ));
        }
        if owner_point.x != grant.owner_x {
            return Err(AuthzError::RoleViolation("owner point is not at the owner slot"));
        }
        if receiver_point.x != slot {
            return Err(AuthzError::RoleViolation(
                "receiver point is not at the receiver's slot",
            ));
        }
        let input =
            ReconstructionInput::with_threshold(vec![server_point, owner_point, receiver_point], THRESHOLD, self.p);
        let poly = reconstruct_polynomial(&input)?;
        if !verify_binding(&poly, &grant.binding(), file_id.as_bytes()) {
            return Err(AuthzError::BindingMismatch);
        }
        Ok(poly.secret())
    }

    /// Decrypts the receiver's share, reconstructs the secret together with
    /// the server and owner points, and opens the envelope.
    pub fn request_decrypt(
        &self,
        file_id: &str,
        owner_point: Option<SharePoint>,
        receiver_id: &str,
        record: &ShareRecord,
        envelope: &CipherEnvelope,
    ) -> Result<Vec<u8>, AuthzError> {
        let grant = &self.grants[self.grant_index(file_id)?];
        let receiver = self.user(receiver_id).ok_or_else(|| AuthzError::NotGranted {
            file_id: file_id.to_owned(),
            user: receiver_id.to_owned(),
        })?;
        if record.file_id != file_id || record.p != self.p.value() {
            return Err(AuthzError::RoleViolation("share record belongs to another file"));
        }
        let receiver_point = record.open(&receiver.credentials, self.p);
        let secret = self.authorize_triple(
            file_id,
            grant.server_share,
            owner_point,
            receiver_id,
            Some(receiver_point),
        )?;
        let key = derive_file_key(secret, file_id.as_bytes(), envelope.header.mode, envelope.header.n)?;
        Ok(open_file(envelope, &key)?)
    }

    /// Removes `user_id` and re-shares the same secret under a fresh salt.
    ///
    /// The owner must present their current point; it is checked by a
    /// three-point reconstruction with the revoked user's share before
    /// anything changes. The data envelope is untouched. Returns the
    /// owner's new point.
    pub fn revoke_user<R: Rng + ?Sized>(
        &mut self,
        file_id: &str,
        user_id: &str,
        owner_point: SharePoint,
        rng: &mut R,
    ) -> Result<SharePoint, AuthzError> {
        let idx = self.grant_index(file_id)?;
        let grant = &self.grants[idx];
        let not_granted = || AuthzError::NotGranted {
            file_id: file_id.to_owned(),
            user: user_id.to_owned(),
        };
        let record = grant.consumers.get(user_id).ok_or_else(not_granted)?;
        let user = self.user(user_id).ok_or_else(not_granted)?;
        let point = record.open(&user.credentials, self.p);
        let secret = self.authorize_triple(file_id, grant.server_share, Some(owner_point), user_id, Some(point))?;

        let owner = self
            .user(&grant.owner_id)
            .ok_or_else(|| AuthzError::UnknownOwner(grant.owner_id.clone()))?
            .clone();
        let p = self.p;
        let salt: [u8; SALT_LEN] = rng.gen();
        let coeffs = derive_attribute_tokens(&owner.attributes(), &salt, THRESHOLD, p)?;
        let poly = sharing_polynomial(secret, &coeffs, p)?;
        let binding = binding_code(secret, &poly, file_id.as_bytes());

        let mut grant = self.grants[idx].clone();
        grant.consumers.remove(user_id);
        let point_at = |x: u64| SharePoint::new(x, poly.eval(x));

        for (uid, rec) in grant.consumers.iter_mut() {
            let creds = &self
                .user(uid)
                .ok_or_else(|| AuthzError::UnknownUser(uid.clone()))?
                .credentials;
            *rec = ShareRecord::seal(file_id, point_at(rec.x), binding, creds, p);
        }
        grant.server_share = point_at(grant.server_share.x);
        grant.kc = binding.kc;
        grant.x_kc = binding.x_kc;
        grant.salt_hex = salt.to_vec();
        let owner_share = point_at(grant.owner_x);
        self.grants[idx] = grant;
        Ok(owner_share)
    }
}
