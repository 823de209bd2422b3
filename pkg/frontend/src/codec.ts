/**
 * Completion-schema codec, kept in lock-step with the service's wire
 * formats. Encoding is canonical (compact JSON, fixed key order, fixed
 * English paradigm phrasing) so a decode -> encode round trip of a
 * service suggestion is byte-identical, and the service accepts what we
 * send. Decoding is strict; anything else is a parse failure, never a
 * partial record.
 */

import {
  DopingRecord,
  Entry,
  FieldIssue,
  MaterialEntry,
  MofEntry,
  SchemaId,
  WorkingRecords,
  emptyDoping,
  isDopingSchema,
} from "./types.js";

export type DecodeResult =
  | { ok: true; records: WorkingRecords }
  | { ok: false; error: string };

const GENERAL_SCALARS = ["name", "formula", "acronym"] as const;
const GENERAL_LISTS = ["description", "structure_or_phase", "applications"] as const;
const MOF_SCALARS = ["name", "mof_formula"] as const;
const MOF_LISTS = ["guest_species", "applications", "description"] as const;

// --- validation ------------------------------------------------------------

function checkEntityText(
  text: string,
  path: string,
  engSchema: boolean,
  issues: FieldIssue[],
): void {
  if (!text) {
    issues.push({ path, message: "must not be empty" });
  } else if (text.includes("\n")) {
    issues.push({ path, message: "must not contain newlines" });
  } else if (engSchema && text.includes("'")) {
    issues.push({ path, message: "apostrophes break the sentence schema" });
  }
}

/** Per-field problems preventing serialization; empty means submittable. */
export function validateRecords(
  schema: SchemaId,
  working: WorkingRecords,
): FieldIssue[] {
  const issues: FieldIssue[] = [];
  const eng = schema === "doping-eng" || schema === "doping-extra-eng";
  if (working.kind === "doping") {
    const r = working.record;
    r.hosts.forEach((t, i) => checkEntityText(t, `hosts[${i}]`, eng, issues));
    r.dopants.forEach((t, i) => checkEntityText(t, `dopants[${i}]`, eng, issues));
    r.results.forEach((t, i) => checkEntityText(t, `results[${i}]`, eng, issues));
    r.modifiers.forEach((t, i) =>
      checkEntityText(t, `modifiers[${i}]`, eng, issues),
    );
    r.links.forEach(([h, d], i) => {
      if (h < 0 || h >= r.hosts.length || d < 0 || d >= r.dopants.length) {
        issues.push({ path: `links[${i}]`, message: "dangling link" });
      }
    });
    return issues;
  }
  const scalars = schema === "mof-json" ? MOF_SCALARS : GENERAL_SCALARS;
  const lists = schema === "mof-json" ? MOF_LISTS : GENERAL_LISTS;
  working.entries.forEach((entry, i) => {
    const rec = entry as unknown as Record<string, string | string[]>;
    const rootA = rec[scalars[0]] as string;
    const rootB = rec[scalars[1]] as string;
    if (!rootA && !rootB) {
      issues.push({
        path: `entries[${i}].${scalars[1]}`,
        message: `a ${scalars[0]} or ${scalars[1]} is required`,
      });
    }
    for (const key of scalars) {
      const v = rec[key] as string;
      if (v && v.includes("\n")) {
        issues.push({ path: `entries[${i}].${key}`, message: "must not contain newlines" });
      }
    }
    for (const key of lists) {
      (rec[key] as string[]).forEach((v, j) =>
        checkEntityText(v, `entries[${i}].${key}[${j}]`, false, issues),
      );
    }
  });
  return issues;
}

// --- encode ----------------------------------------------------------------

function sortedLinkedDopants(r: DopingRecord, host: number): number[] {
  const out = [...new Set(r.links.filter(([h]) => h === host).map(([, d]) => d))];
  out.sort((a, b) => a - b);
  return out;
}

function encodeDopingJson(r: DopingRecord): string {
  const hosts: Record<string, string> = {};
  r.hosts.forEach((t, i) => (hosts[`h${i}`] = t));
  const dopants: Record<string, string> = {};
  r.dopants.forEach((t, i) => (dopants[`d${i}`] = t));
  const rel: Record<string, string[]> = {};
  r.hosts.forEach((_, i) => {
    rel[`h${i}`] = sortedLinkedDopants(r, i).map((d) => `d${d}`);
  });
  return JSON.stringify({ hosts, dopants, hosts2dopants: rel });
}

function joinQuoted(texts: string[]): string {
  const quoted = texts.map((t) => `'${t}'`);
  if (quoted.length === 1) return quoted[0];
  if (quoted.length === 2) return `${quoted[0]} and ${quoted[1]}`;
  return `${quoted.slice(0, -1).join(", ")}, and ${quoted[quoted.length - 1]}`;
}

export const NO_INFO_LINE = "There is no doping information.";

function encodeDopingEng(r: DopingRecord, extra: boolean): string {
  const lines: string[] = [];
  const linkedDopants = new Set(r.links.map(([, d]) => d));
  const linkedHosts = new Set(r.links.map(([h]) => h));
  r.hosts.forEach((host, i) => {
    const ds = sortedLinkedDopants(r, i);
    if (ds.length) {
      lines.push(
        `The host '${host}' was doped with ${joinQuoted(ds.map((d) => r.dopants[d]))}.`,
      );
    }
  });
  r.dopants.forEach((d, i) => {
    if (!linkedDopants.has(i)) lines.push(`'${d}' is a dopant.`);
  });
  r.hosts.forEach((h, i) => {
    if (!linkedHosts.has(i)) lines.push(`The host '${h}' was doped.`);
  });
  if (extra) {
    for (const res of r.results) {
      lines.push(`'${res}' is a possible doped result formula.`);
    }
    if (r.modifiers.length) {
      lines.push(
        `Modifiers of the doping are ${r.modifiers.map((m) => `'${m}'`).join(", ")}.`,
      );
    }
  }
  return lines.length ? lines.join("\n") : NO_INFO_LINE;
}

function encodeEntries(schema: SchemaId, entries: Entry[]): string {
  const ordered = entries.map((entry) => {
    if (schema === "mof-json") {
      const e = entry as MofEntry;
      return {
        name: e.name,
        mof_formula: e.mof_formula,
        guest_species: e.guest_species,
        applications: e.applications,
        description: e.description,
      };
    }
    const e = entry as MaterialEntry;
    return {
      name: e.name,
      formula: e.formula,
      acronym: e.acronym,
      description: e.description,
      structure_or_phase: e.structure_or_phase,
      applications: e.applications,
    };
  });
  return JSON.stringify(ordered);
}

/** Canonical completion body; call validateRecords first. */
export function encodeCompletion(schema: SchemaId, working: WorkingRecords): string {
  const issues = validateRecords(schema, working);
  if (issues.length) {
    throw new Error(`records not serializable: ${issues[0].path}: ${issues[0].message}`);
  }
  if (working.kind === "doping") {
    if (schema === "doping-json") return encodeDopingJson(working.record);
    return encodeDopingEng(working.record, schema === "doping-extra-eng");
  }
  return encodeEntries(schema, working.entries);
}

// --- decode ----------------------------------------------------------------

const QUOTED = "'([^'\\n]+)'";
const LIST_ITEM = "'[^'\\n]+'";
const LIST = `${LIST_ITEM}(?:, ${LIST_ITEM})*(?:,? and ${LIST_ITEM})?`;
const HOST_WITH_DOPANTS = new RegExp(
  `^The host ${QUOTED} was doped with (${LIST})\\.$`,
);
const LONE_DOPANT = new RegExp(`^${QUOTED} is a dopant\\.$`);
const LONE_HOST = new RegExp(`^The host ${QUOTED} was doped\\.$`);
const RESULT_LINE = new RegExp(`^${QUOTED} is a possible doped result formula\\.$`);
const MODIFIERS_LINE = new RegExp(`^Modifiers of the doping are (${LIST})\\.$`);
const LIST_SPLIT = /'([^'\n]+)'/g;

function splitQuoted(list: string): string[] {
  const out: string[] = [];
  for (const m of list.matchAll(LIST_SPLIT)) out.push(m[1]);
  return out;
}

function decodeDopingEng(s: string): DecodeResult {
  const r = emptyDoping();
  const dopantIndex = new Map<string, number>();
  const lines = s.split("\n").filter((ln) => ln !== "");
  if (!lines.length) return { ok: false, error: "empty completion" };
  let sawNoInfo = false;
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    const where = `line ${i + 1}`;
    if (line === NO_INFO_LINE) {
      sawNoInfo = true;
      continue;
    }
    let m = line.match(HOST_WITH_DOPANTS);
    if (m) {
      const h = r.hosts.length;
      r.hosts.push(m[1]);
      for (const text of splitQuoted(m[2])) {
        if (!dopantIndex.has(text)) {
          dopantIndex.set(text, r.dopants.length);
          r.dopants.push(text);
        }
        const d = dopantIndex.get(text)!;
        if (!r.links.some(([lh, ld]) => lh === h && ld === d)) r.links.push([h, d]);
      }
      continue;
    }
    m = line.match(LONE_DOPANT);
    if (m) {
      r.dopants.push(m[1]);
      continue;
    }
    m = line.match(LONE_HOST);
    if (m) {
      r.hosts.push(m[1]);
      continue;
    }
    m = line.match(RESULT_LINE);
    if (m) {
      r.results.push(m[1]);
      continue;
    }
    m = line.match(MODIFIERS_LINE);
    if (m) {
      r.modifiers.push(...splitQuoted(m[1]));
      continue;
    }
    return { ok: false, error: `${where}: no paradigm match` };
  }
  const hasContent =
    r.hosts.length || r.dopants.length || r.results.length || r.modifiers.length;
  if (sawNoInfo && (hasContent || lines.length > 1)) {
    return { ok: false, error: "no-information line must stand alone" };
  }
  return { ok: true, records: { kind: "doping", record: r } };
}

const INDEX_KEY = /^([hd])(0|[1-9]\d*)$/;

function decodeIndexMap(
  obj: unknown,
  prefix: string,
  what: string,
): string[] | string {
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return `${what} must be an object`;
  }
  const texts = new Map<number, string>();
  for (const [key, value] of Object.entries(obj)) {
    const m = key.match(INDEX_KEY);
    if (!m || m[1] !== prefix) return `bad ${what} key '${key}'`;
    if (typeof value !== "string" || !value || value.includes("\n")) {
      return `${what} value for '${key}' must be a non-empty string`;
    }
    texts.set(Number(m[2]), value);
  }
  const out: string[] = [];
  for (let i = 0; i < texts.size; i++) {
    const t = texts.get(i);
    if (t === undefined) return `${what} keys must be consecutive from ${prefix}0`;
    out.push(t);
  }
  return out;
}

function decodeDopingJson(s: string): DecodeResult {
  let root: unknown;
  try {
    root = JSON.parse(s);
  } catch (exc) {
    return { ok: false, error: `json: ${String(exc)}` };
  }
  if (typeof root !== "object" || root === null || Array.isArray(root)) {
    return { ok: false, error: "root must be a JSON object" };
  }
  const keys = Object.keys(root).sort();
  if (JSON.stringify(keys) !== '["dopants","hosts","hosts2dopants"]') {
    return { ok: false, error: `unexpected key set [${keys}]` };
  }
  const obj = root as Record<string, unknown>;
  const hosts = decodeIndexMap(obj.hosts, "h", "hosts");
  if (typeof hosts === "string") return { ok: false, error: hosts };
  const dopants = decodeIndexMap(obj.dopants, "d", "dopants");
  if (typeof dopants === "string") return { ok: false, error: dopants };
  const rel = obj.hosts2dopants;
  if (typeof rel !== "object" || rel === null || Array.isArray(rel)) {
    return { ok: false, error: "hosts2dopants must be an object" };
  }
  const relKeys = Object.keys(rel).sort();
  const hostKeys = hosts.map((_, i) => `h${i}`).sort();
  if (JSON.stringify(relKeys) !== JSON.stringify(hostKeys)) {
    return { ok: false, error: "hosts2dopants key set must equal the host key set" };
  }
  const links: [number, number][] = [];
  for (const [hkey, dkeys] of Object.entries(rel)) {
    const h = Number(hkey.slice(1));
    if (!Array.isArray(dkeys)) return { ok: false, error: `${hkey}: link value must be a list` };
    const seen: number[] = [];
    for (const dkey of dkeys) {
      const m = typeof dkey === "string" ? dkey.match(INDEX_KEY) : null;
      if (!m || m[1] !== "d" || Number(m[2]) >= dopants.length) {
        return { ok: false, error: `${hkey}: dangling dopant key '${dkey}'` };
      }
      seen.push(Number(m[2]));
    }
    const sortedUnique = [...new Set(seen)].sort((a, b) => a - b);
    if (JSON.stringify(seen) !== JSON.stringify(sortedUnique)) {
      return { ok: false, error: `${hkey}: dopant keys must be sorted and unique` };
    }
    for (const d of seen) links.push([h, d]);
  }
  links.sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  return {
    ok: true,
    records: {
      kind: "doping",
      record: { hosts, dopants, links, results: [], modifiers: [] },
    },
  };
}

function decodeEntries(schema: SchemaId, s: string): DecodeResult {
  let root: unknown;
  try {
    root = JSON.parse(s);
  } catch (exc) {
    return { ok: false, error: `json: ${String(exc)}` };
  }
  if (!Array.isArray(root)) return { ok: false, error: "root must be a JSON array" };
  const scalars: readonly string[] = schema === "mof-json" ? MOF_SCALARS : GENERAL_SCALARS;
  const lists: readonly string[] = schema === "mof-json" ? MOF_LISTS : GENERAL_LISTS;
  const entries: Entry[] = [];
  for (let i = 0; i < root.length; i++) {
    const where = `entry ${i}`;
    const raw = root[i];
    if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
      return { ok: false, error: `${where}: must be an object` };
    }
    const rec = raw as Record<string, unknown>;
    for (const key of Object.keys(rec)) {
      if (!scalars.includes(key) && !lists.includes(key)) {
        return { ok: false, error: `${where}: unknown key '${key}'` };
      }
    }
    const entry: Record<string, string | string[]> = {};
    for (const key of scalars) {
      const v = rec[key] ?? "";
      if (typeof v !== "string") return { ok: false, error: `${where}: ${key} must be a string` };
      entry[key] = v;
    }
    for (const key of lists) {
      const v = rec[key] ?? [];
      if (!Array.isArray(v) || v.some((x) => typeof x !== "string" || !x)) {
        return { ok: false, error: `${where}: ${key} must be a list` };
      }
      entry[key] = v as string[];
    }
    if (!entry[scalars[0]] && !entry[scalars[1]]) {
      return { ok: false, error: `${where}: no root entity` };
    }
    entries.push(entry as unknown as Entry);
  }
  return { ok: true, records: { kind: "entries", entries } };
}

export function decodeCompletion(schema: SchemaId, s: string): DecodeResult {
  if (schema === "doping-json") return decodeDopingJson(s);
  if (isDopingSchema(schema)) return decodeDopingEng(s);
  return decodeEntries(schema, s);
}

/** Blank working records for a task with no usable suggestion. */
export function blankRecords(schema: SchemaId): WorkingRecords {
  if (isDopingSchema(schema)) return { kind: "doping", record: emptyDoping() };
  return { kind: "entries", entries: [] };
}
