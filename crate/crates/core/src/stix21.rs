//! Static listing of the STIX 2.1 object types, property definitions, and
//! controlled vocabularies used for validation, native-field stripping, and
//! dictionary construction.
//!
//! The listings are transcribed from the STIX 2.1 committee specification.
//! Property sets are the union of the common properties for the object class
//! and the type-specific properties.

/// STIX Domain Object type names.
pub const SDO_TYPES: &[&str] = &[
    "attack-pattern",
    "campaign",
    "course-of-action",
    "grouping",
    "identity",
    "incident",
    "indicator",
    "infrastructure",
    "intrusion-set",
    "location",
    "malware",
    "malware-analysis",
    "note",
    "observed-data",
    "opinion",
    "report",
    "threat-actor",
    "tool",
    "vulnerability",
];

/// STIX Cyber-observable Object type names.
pub const SCO_TYPES: &[&str] = &[
    "artifact",
    "autonomous-system",
    "directory",
    "domain-name",
    "email-addr",
    "email-message",
    "file",
    "ipv4-addr",
    "ipv6-addr",
    "mac-addr",
    "mutex",
    "network-traffic",
    "process",
    "software",
    "url",
    "user-account",
    "windows-registry-key",
    "x509-certificate",
];

/// STIX Relationship Object type names.
pub const SRO_TYPES: &[&str] = &["relationship", "sighting"];

/// Marking / meta object type names.
pub const MARKING_TYPES: &[&str] = &["marking-definition", "language-content"];

/// Common properties shared by every SDO.
pub const SDO_COMMON: &[&str] = &[
    "type",
    "spec_version",
    "id",
    "created_by_ref",
    "created",
    "modified",
    "revoked",
    "labels",
    "confidence",
    "lang",
    "external_references",
    "object_marking_refs",
    "granular_markings",
    "extensions",
];

/// Common properties shared by every SCO.
pub const SCO_COMMON: &[&str] = &[
    "type",
    "spec_version",
    "id",
    "object_marking_refs",
    "granular_markings",
    "defanged",
    "extensions",
];

/// Keys permitted at the bundle level.
pub const BUNDLE_KEYS: &[&str] = &["type", "id", "objects", "spec_version"];

/// Hash algorithm names from hash-algorithm-ov; these occur as map keys
/// inside `hashes` dictionaries and therefore join the key space.
pub const HASH_ALGORITHMS: &[&str] = &[
    "MD5", "SHA-1", "SHA-256", "SHA-512", "SHA3-256", "SHA3-512", "SSDEEP", "TLSH",
];

/// Keys of nested sub-structures (external references, kill chain phases,
/// granular markings, marking definitions, registry values, MIME parts).
pub const NESTED_KEYS: &[&str] = &[
    "source_name",
    "external_id",
    "kill_chain_name",
    "phase_name",
    "marking_ref",
    "selectors",
    "definition_type",
    "definition",
    "statement",
    "tlp",
    "data",
    "data_type",
    "body_raw_ref",
    "content_disposition",
];

/// Type-specific properties, beyond the class-common set.
pub fn type_specific_properties(object_type: &str) -> Option<&'static [&'static str]> {
    Some(match object_type {
        "attack-pattern" => &["name", "description", "aliases", "kill_chain_phases"],
        "campaign" => &[
            "name",
            "description",
            "aliases",
            "first_seen",
            "last_seen",
            "objective",
        ],
        "course-of-action" => &["name", "description"],
        "grouping" => &["name", "description", "context", "object_refs"],
        "identity" => &[
            "name",
            "description",
            "roles",
            "identity_class",
            "sectors",
            "contact_information",
        ],
        "incident" => &["name", "description"],
        "indicator" => &[
            "name",
            "description",
            "indicator_types",
            "pattern",
            "pattern_type",
            "pattern_version",
            "valid_from",
            "valid_until",
            "kill_chain_phases",
        ],
        "infrastructure" => &[
            "name",
            "description",
            "infrastructure_types",
            "aliases",
            "kill_chain_phases",
            "first_seen",
            "last_seen",
        ],
        "intrusion-set" => &[
            "name",
            "description",
            "aliases",
            "first_seen",
            "last_seen",
            "goals",
            "resource_level",
            "primary_motivation",
            "secondary_motivations",
        ],
        "location" => &[
            "name",
            "description",
            "latitude",
            "longitude",
            "precision",
            "region",
            "country",
            "administrative_area",
            "city",
            "street_address",
            "postal_code",
        ],
        "malware" => &[
            "name",
            "description",
            "malware_types",
            "is_family",
            "aliases",
            "kill_chain_phases",
            "first_seen",
            "last_seen",
            "operating_system_refs",
            "architecture_execution_envs",
            "implementation_languages",
            "capabilities",
            "sample_refs",
        ],
        "malware-analysis" => &[
            "product",
            "version",
            "host_vm_ref",
            "operating_system_ref",
            "installed_software_refs",
            "configuration_version",
            "modules",
            "analysis_engine_version",
            "analysis_definition_version",
            "submitted",
            "analysis_started",
            "analysis_ended",
            "result_name",
            "result",
            "analysis_sco_refs",
            "sample_ref",
        ],
        "note" => &["abstract", "content", "authors", "object_refs"],
        "observed-data" => &[
            "first_observed",
            "last_observed",
            "number_observed",
            "objects",
            "object_refs",
        ],
        "opinion" => &["explanation", "authors", "opinion", "object_refs"],
        "report" => &[
            "name",
            "description",
            "report_types",
            "published",
            "object_refs",
        ],
        "threat-actor" => &[
            "name",
            "description",
            "threat_actor_types",
            "aliases",
            "first_seen",
            "last_seen",
            "roles",
            "goals",
            "sophistication",
            "resource_level",
            "primary_motivation",
            "secondary_motivations",
            "personal_motivations",
        ],
        "tool" => &[
            "name",
            "description",
            "tool_types",
            "aliases",
            "kill_chain_phases",
            "tool_version",
        ],
        "vulnerability" => &["name", "description"],
        "relationship" => &[
            "relationship_type",
            "description",
            "source_ref",
            "target_ref",
            "start_time",
            "stop_time",
        ],
        "sighting" => &[
            "description",
            "first_seen",
            "last_seen",
            "count",
            "sighting_of_ref",
            "observed_data_refs",
            "where_sighted_refs",
            "summary",
        ],
        "marking-definition" => &["definition_type", "definition", "name"],
        "language-content" => &["object_ref", "object_modified", "contents"],
        "artifact" => &[
            "mime_type",
            "payload_bin",
            "url",
            "hashes",
            "encryption_algorithm",
            "decryption_key",
        ],
        "autonomous-system" => &["number", "name", "rir"],
        "directory" => &[
            "path",
            "path_enc",
            "ctime",
            "mtime",
            "atime",
            "contains_refs",
        ],
        "domain-name" => &["value", "resolves_to_refs"],
        "email-addr" => &["value", "display_name", "belongs_to_ref"],
        "email-message" => &[
            "is_multipart",
            "date",
            "content_type",
            "from_ref",
            "sender_ref",
            "to_refs",
            "cc_refs",
            "bcc_refs",
            "message_id",
            "subject",
            "received_lines",
            "additional_header_fields",
            "body",
            "body_multipart",
            "raw_email_ref",
        ],
        "file" => &[
            "hashes",
            "size",
            "name",
            "name_enc",
            "magic_number_hex",
            "mime_type",
            "ctime",
            "mtime",
            "atime",
            "parent_directory_ref",
            "contains_refs",
            "content_ref",
        ],
        "ipv4-addr" | "ipv6-addr" => &["value", "resolves_to_refs", "belongs_to_refs"],
        "mac-addr" | "url" => &["value"],
        "mutex" => &["name"],
        "network-traffic" => &[
            "start",
            "end",
            "is_active",
            "src_ref",
            "dst_ref",
            "src_port",
            "dst_port",
            "protocols",
            "src_byte_count",
            "dst_byte_count",
            "src_packets",
            "dst_packets",
            "ipfix",
            "src_payload_ref",
            "dst_payload_ref",
            "encapsulates_refs",
            "encapsulated_by_ref",
        ],
        "process" => &[
            "is_hidden",
            "pid",
            "created_time",
            "cwd",
            "command_line",
            "environment_variables",
            "opened_connection_refs",
            "creator_user_ref",
            "image_ref",
            "parent_ref",
            "child_refs",
        ],
        "software" => &["name", "cpe", "swid", "languages", "vendor", "version"],
        "user-account" => &[
            "user_id",
            "credential",
            "account_login",
            "account_type",
            "display_name",
            "is_service_account",
            "is_privileged",
            "can_escalate_privs",
            "is_disabled",
            "account_created",
            "account_expires",
            "credential_last_changed",
            "account_first_login",
            "account_last_login",
        ],
        "windows-registry-key" => &[
            "key",
            "values",
            "modified_time",
            "creator_user_ref",
            "number_of_subkeys",
        ],
        "x509-certificate" => &[
            "is_self_signed",
            "hashes",
            "version",
            "serial_number",
            "signature_algorithm",
            "issuer",
            "validity_not_before",
            "validity_not_after",
            "subject",
            "subject_public_key_algorithm",
            "subject_public_key_modulus",
            "subject_public_key_exponent",
            "x509_v3_extensions",
        ],
        "bundle" => &["objects"],
        _ => return None,
    })
}

/// Controlled vocabularies: name paired with the unsorted term listing.
pub fn vocabularies() -> Vec<(&'static str, Vec<&'static str>)> {
    vec![
        ("spec-version", vec!["2.0", "2.1"]),
        (
            "indicator-type-ov",
            vec![
                "anomalous-activity",
                "anonymization",
                "benign",
                "compromised",
                "malicious-activity",
                "attribution",
                "unknown",
            ],
        ),
        (
            "malware-type-ov",
            vec![
                "adware",
                "backdoor",
                "bot",
                "bootkit",
                "ddos",
                "downloader",
                "dropper",
                "exploit-kit",
                "keylogger",
                "ransomware",
                "remote-access-trojan",
                "resource-exploitation",
                "rogue-security-software",
                "rootkit",
                "screen-capture",
                "spyware",
                "trojan",
                "unknown",
                "virus",
                "webshell",
                "wiper",
                "worm",
            ],
        ),
        (
            "pattern-type-ov",
            vec!["pcre", "sigma", "snort", "stix", "suricata", "yara"],
        ),
        (
            "report-type-ov",
            vec![
                "attack-pattern",
                "campaign",
                "identity",
                "indicator",
                "intrusion-set",
                "malware",
                "observed-data",
                "threat-actor",
                "threat-report",
                "tool",
                "vulnerability",
            ],
        ),
        (
            "threat-actor-type-ov",
            vec![
                "activist",
                "competitor",
                "crime-syndicate",
                "criminal",
                "hacker",
                "insider-accidental",
                "insider-disgruntled",
                "nation-state",
                "sensationalist",
                "spy",
                "terrorist",
                "unknown",
            ],
        ),
        (
            "threat-actor-role-ov",
            vec![
                "agent",
                "director",
                "independent",
                "infrastructure-architect",
                "infrastructure-operator",
                "malware-author",
                "sponsor",
            ],
        ),
        (
            "threat-actor-sophistication-ov",
            vec![
                "none",
                "minimal",
                "intermediate",
                "advanced",
                "expert",
                "innovator",
                "strategic",
                "integrated",
            ],
        ),
        (
            "attack-motivation-ov",
            vec![
                "accidental",
                "coercion",
                "dominance",
                "ideology",
                "notoriety",
                "organizational-gain",
                "personal-gain",
                "personal-satisfaction",
                "revenge",
                "unpredictable",
            ],
        ),
        (
            "attack-resource-level-ov",
            vec![
                "individual",
                "club",
                "contest",
                "team",
                "organization",
                "government",
            ],
        ),
        (
            "identity-class-ov",
            vec![
                "individual",
                "group",
                "system",
                "organization",
                "class",
                "unknown",
            ],
        ),
        (
            "industry-sector-ov",
            vec![
                "agriculture",
                "aerospace",
                "automotive",
                "chemical",
                "commercial",
                "communications",
                "construction",
                "defense",
                "education",
                "energy",
                "entertainment",
                "financial-services",
                "government",
                "government-emergency-services",
                "government-local",
                "government-national",
                "government-public-services",
                "government-regional",
                "healthcare",
                "hospitality-leisure",
                "infrastructure",
                "infrastructure-dams",
                "infrastructure-nuclear",
                "infrastructure-water",
                "insurance",
                "manufacturing",
                "mining",
                "non-profit",
                "pharmaceuticals",
                "retail",
                "technology",
                "telecommunications",
                "transportation",
                "utilities",
            ],
        ),
        (
            "infrastructure-type-ov",
            vec![
                "amplification",
                "anonymization",
                "botnet",
                "command-and-control",
                "control-system",
                "exfiltration",
                "firewall",
                "hosting-malware",
                "hosting-target-lists",
                "phishing",
                "reconnaissance",
                "routers-switches",
                "staging",
                "unknown",
                "workstation",
            ],
        ),
        (
            "malware-capabilities-ov",
            vec![
                "accesses-remote-machines",
                "anti-debugging",
                "anti-disassembly",
                "anti-emulation",
                "anti-memory-forensics",
                "anti-sandbox",
                "anti-vm",
                "captures-input-peripherals",
                "captures-output-peripherals",
                "captures-system-state-data",
                "cleans-traces-of-infection",
                "commits-fraud",
                "communicates-with-c2",
                "compromises-data-availability",
                "compromises-data-integrity",
                "compromises-system-availability",
                "controls-local-machine",
                "degrades-security-software",
                "degrades-system-updates",
                "determines-c2-server",
                "emails-spam",
                "escalates-privileges",
                "evades-av",
                "exfiltrates-data",
                "fingerprints-host",
                "hides-artifacts",
                "hides-executing-code",
                "infects-files",
                "infects-remote-machines",
                "installs-other-components",
                "persists-after-system-reboot",
                "prevents-artifact-access",
                "prevents-artifact-deletion",
                "probes-network-environment",
                "self-modifies",
                "steals-authentication-credentials",
                "violates-system-operational-integrity",
            ],
        ),
        (
            "processor-architecture-ov",
            vec![
                "alpha", "arm", "ia-64", "mips", "powerpc", "sparc", "x86", "x86-64",
            ],
        ),
        (
            "implementation-language-ov",
            vec![
                "applescript",
                "bash",
                "c",
                "c++",
                "c#",
                "go",
                "java",
                "javascript",
                "lua",
                "objective-c",
                "perl",
                "php",
                "powershell",
                "python",
                "ruby",
                "rust",
                "scala",
                "swift",
                "typescript",
                "visual-basic",
                "x86-32",
                "x86-64",
            ],
        ),
        (
            "tool-type-ov",
            vec![
                "credential-exploitation",
                "denial-of-service",
                "exploitation",
                "information-gathering",
                "network-capture",
                "remote-access",
                "vulnerability-scanning",
                "unknown",
            ],
        ),
        (
            "grouping-context-ov",
            vec!["suspicious-activity", "malware-analysis", "unspecified"],
        ),
        (
            "region-ov",
            vec![
                "africa",
                "eastern-africa",
                "middle-africa",
                "northern-africa",
                "southern-africa",
                "western-africa",
                "americas",
                "caribbean",
                "central-america",
                "latin-america-caribbean",
                "northern-america",
                "south-america",
                "asia",
                "central-asia",
                "eastern-asia",
                "southern-asia",
                "south-eastern-asia",
                "western-asia",
                "europe",
                "eastern-europe",
                "northern-europe",
                "southern-europe",
                "western-europe",
                "oceania",
                "antarctica",
                "australia-new-zealand",
                "melanesia",
                "micronesia",
                "polynesia",
            ],
        ),
        (
            "account-type-ov",
            vec![
                "facebook",
                "ldap",
                "nis",
                "openid",
                "radius",
                "skype",
                "tacacs",
                "twitter",
                "unix",
                "windows-local",
                "windows-domain",
            ],
        ),
        (
            "relationship-type",
            vec![
                "attributed-to",
                "authored-by",
                "based-on",
                "beacons-to",
                "belongs-to",
                "communicates-with",
                "compromises",
                "consists-of",
                "controls",
                "delivers",
                "derived-from",
                "detects",
                "downloads",
                "drops",
                "duplicate-of",
                "dynamic-analysis-of",
                "exfiltrates-to",
                "exploits",
                "has",
                "hosts",
                "impersonates",
                "indicates",
                "investigates",
                "located-at",
                "mitigates",
                "originates-from",
                "owns",
                "related-to",
                "remediates",
                "resolves-to",
                "revoked-by",
                "static-analysis-of",
                "subtechnique-of",
                "targets",
                "uses",
                "variant-of",
            ],
        ),
        (
            "opinion-enum",
            vec![
                "strongly-disagree",
                "disagree",
                "neutral",
                "agree",
                "strongly-agree",
            ],
        ),
        (
            "malware-result-ov",
            vec!["malicious", "suspicious", "benign", "unknown"],
        ),
        (
            "windows-registry-datatype-enum",
            vec![
                "REG_NONE",
                "REG_SZ",
                "REG_EXPAND_SZ",
                "REG_BINARY",
                "REG_DWORD",
                "REG_DWORD_BIG_ENDIAN",
                "REG_LINK",
                "REG_MULTI_SZ",
                "REG_QWORD",
                "REG_RESOURCE_LIST",
                "REG_FULL_RESOURCE_DESCRIPTOR",
                "REG_RESOURCE_REQUIREMENTS_LIST",
            ],
        ),
        (
            "encryption-algorithm-enum",
            vec!["AES-256-GCM", "ChaCha20-Poly1305", "mime-type-indicated"],
        ),
    ]
}

/// Binding from property name to the vocabulary constraining its values.
/// The binding applies at any nesting depth; `type` is handled separately
/// through the type map.
pub const PROPERTY_VOCAB: &[(&str, &str)] = &[
    ("spec_version", "spec-version"),
    ("pattern_version", "spec-version"),
    ("indicator_types", "indicator-type-ov"),
    ("malware_types", "malware-type-ov"),
    ("pattern_type", "pattern-type-ov"),
    ("report_types", "report-type-ov"),
    ("threat_actor_types", "threat-actor-type-ov"),
    ("roles", "threat-actor-role-ov"),
    ("sophistication", "threat-actor-sophistication-ov"),
    ("primary_motivation", "attack-motivation-ov"),
    ("secondary_motivations", "attack-motivation-ov"),
    ("personal_motivations", "attack-motivation-ov"),
    ("resource_level", "attack-resource-level-ov"),
    ("identity_class", "identity-class-ov"),
    ("sectors", "industry-sector-ov"),
    ("infrastructure_types", "infrastructure-type-ov"),
    ("capabilities", "malware-capabilities-ov"),
    ("architecture_execution_envs", "processor-architecture-ov"),
    ("implementation_languages", "implementation-language-ov"),
    ("tool_types", "tool-type-ov"),
    ("context", "grouping-context-ov"),
    ("region", "region-ov"),
    ("account_type", "account-type-ov"),
    ("relationship_type", "relationship-type"),
    ("opinion", "opinion-enum"),
    ("result", "malware-result-ov"),
    ("data_type", "windows-registry-datatype-enum"),
    ("encryption_algorithm", "encryption-algorithm-enum"),
];

/// All known object type names (the 29 benchmark types are a subset).
pub fn all_types() -> Vec<&'static str> {
    let mut v = Vec::new();
    v.extend_from_slice(SDO_TYPES);
    v.extend_from_slice(SCO_TYPES);
    v.extend_from_slice(SRO_TYPES);
    v.extend_from_slice(MARKING_TYPES);
    v.push("bundle");
    v
}

/// Every property name defined anywhere in the listing, deduplicated.
pub fn all_property_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = Vec::new();
    names.extend_from_slice(SDO_COMMON);
    names.extend_from_slice(SCO_COMMON);
    names.extend_from_slice(BUNDLE_KEYS);
    names.extend_from_slice(NESTED_KEYS);
    names.extend_from_slice(HASH_ALGORITHMS);
    for t in all_types() {
        if let Some(props) = type_specific_properties(t) {
            names.extend_from_slice(props);
        }
    }
    names.sort_unstable();
    names.dedup();
    names
}
