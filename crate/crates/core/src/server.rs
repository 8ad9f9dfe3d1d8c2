//! Organization server: the policy database persisted next to an object
//! store, with every mutation written to `policy.json` and mirrored to the
//! ACL backup.

use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use crate::authz::{AuthzError, GrantConfig, GrantOutcome, PolicyDb, UserRecord};
use crate::field::FieldModulus;
use crate::sharing::{SharePoint, ShareRecord};
use crate::storage::{load_policy, save_policy, ObjectStore, StorageError};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error(transparent)]
    Authz(#[from] AuthzError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("policy database uses p = {stored}, requested p = {requested}")]
    ModulusMismatch { stored: u64, requested: u64 },
}

#[derive(Debug)]
pub struct OrgServer {
    db: PolicyDb,
    db_path: PathBuf,
    store: ObjectStore,
}

impl OrgServer {
    /// Opens the store at `store_root` and loads the policy database from
    /// `db_path` (default `<store_root>/policy.json`), creating an empty one
    /// if absent. A requested modulus must match a stored database.
    pub fn open(
        store_root: impl Into<PathBuf>,
        db_path: Option<PathBuf>,
        modulus: Option<FieldModulus>,
    ) -> Result<Self, ServerError> {
        let store = ObjectStore::open(store_root)?;
        let db_path = db_path.unwrap_or_else(|| store.default_policy_path());
        let db = if db_path.exists() {
            let db = load_policy(&db_path)?;
            if let Some(m) = modulus {
                if m.value() != db.p.value() {
                    return Err(ServerError::ModulusMismatch {
                        stored: db.p.value(),
                        requested: m.value(),
                    });
                }
            }
            db
        } else {
            PolicyDb::new(modulus.unwrap_or_default())
        };
        Ok(Self { db, db_path, store })
    }

    pub fn db(&self) -> &PolicyDb {
        &self.db
    }

    pub fn store(&self) -> &ObjectStore {
        &self.store
    }

    pub fn db_path(&self) -> &Path {
        &self.db_path
    }

    pub fn persist(&self) -> Result<(), ServerError> {
        save_policy(&self.db_path, &self.db)?;
        self.store.backup_policy(&self.db)?;
        Ok(())
    }

    pub fn register(&mut self, record: UserRecord) -> Result<(), ServerError> {
        self.db.register_user(record)?;
        self.persist()
    }

    /// Grants access, uploads the envelope, and persists. On any failure the
    /// in-memory database is left unchanged.
    pub fn grant<R: Rng + ?Sized>(
        &mut self,
        file_id: &str,
        owner_id: &str,
        consumer_ids: &[&str],
        data: &[u8],
        config: &GrantConfig,
        rng: &mut R,
    ) -> Result<GrantOutcome, ServerError> {
        let before = self.db.clone();
        let result = self
            .db
            .grant_access(file_id, owner_id, consumer_ids, data, config, rng)
            .map_err(ServerError::from)
            .and_then(|out| {
                self.store.put_envelope(&out.envelope_ref, &out.envelope)?;
                self.persist()?;
                Ok(out)
            });
        if result.is_err() {
            self.db = before;
        }
        result
    }

    pub fn share_record(&self, file_id: &str, user_id: &str) -> Option<&ShareRecord> {
        self.db.grant(file_id)?.consumers.get(user_id)
    }

    /// Fetches the stored envelope and runs the three-point decryption.
    pub fn request(
        &self,
        file_id: &str,
        owner_point: Option<SharePoint>,
        receiver_id: &str,
        record: &ShareRecord,
    ) -> Result<Vec<u8>, ServerError> {
        let grant = self
            .db
            .grant(file_id)
            .ok_or_else(|| AuthzError::UnknownFile(file_id.to_owned()))?;
        let envelope = self.store.get_envelope(&grant.envelope_ref)?;
        Ok(self
            .db
            .request_decrypt(file_id, owner_point, receiver_id, record, &envelope)?)
    }

    pub fn revoke<R: Rng + ?Sized>(
        &mut self,
        file_id: &str,
        user_id: &str,
        owner_point: SharePoint,
        rng: &mut R,
    ) -> Result<SharePoint, ServerError> {
        let before = self.db.clone();
        let result = self
            .db
            .revoke_user(file_id, user_id, owner_point, rng)
            .map_err(ServerError::from)
            .and_then(|p| {
                self.persist()?;
                Ok(p)
            });
        if result.is_err() {
            self.db = before;
        }
        result
    }
}
