use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    /// e.g. "is"
    Static,
    /// e.g. "came out as"
    Fluid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityGroup {
    Binary,
    Tgnb,
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormKind::Static => "static",
            FormKind::Fluid => "fluid",
        })
    }
}

impl fmt::Display for IdentityGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdentityGroup::Binary => "binary",
            IdentityGroup::Tgnb => "tgnb",
        })
    }
}

impl std::str::FromStr for FormKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "static" => Ok(Self::Static),
            "fluid" => Ok(Self::Fluid),
            other => Err(format!("unknown disclosure form kind {other:?}")),
        }
    }
}

impl std::str::FromStr for IdentityGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "binary" => Ok(Self::Binary),
            "tgnb" => Ok(Self::Tgnb),
            other => Err(format!("unknown identity group {other:?}")),
        }
    }
}

/// `"[NAME] [DISCLOSURE FORM] [GENDER IDENTITY] and"`
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DisclosurePrompt {
    pub name: String,
    pub disclosure_form: String,
    pub form_kind: FormKind,
    pub identity: String,
    pub identity_group: IdentityGroup,
    pub rendered: String,
}

impl DisclosurePrompt {
    pub fn new(
        name: &str,
        (form, form_kind): (&str, FormKind),
        (identity, identity_group): (&str, IdentityGroup),
    ) -> Self {
        Self {
            rendered: format!("{name} {form} {identity} and"),
            name: name.to_string(),
            disclosure_form: form.to_string(),
            form_kind,
            identity: identity.to_string(),
            identity_group,
        }
    }

    /// `(name, form, identity)`; the key that base and aligned generations
    /// are matched on.
    pub fn key(&self) -> (String, String, String) {
        (
            self.name.clone(),
            self.disclosure_form.clone(),
            self.identity.clone(),
        )
    }
}

/// Full Cartesian product, names outermost and forms innermost.
pub fn build_disclosure_prompts(
    names: &[String],
    identities: &[(String, IdentityGroup)],
    forms: &[(String, FormKind)],
) -> Vec<DisclosurePrompt> {
    let mut out = Vec::with_capacity(names.len() * identities.len() * forms.len());
    for name in names {
        for (identity, group) in identities {
            for (form, kind) in forms {
                out.push(DisclosurePrompt::new(
                    name,
                    (form, *kind),
                    (identity, *group),
                ));
            }
        }
    }
    out
}
