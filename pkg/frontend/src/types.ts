export type SchemaId =
  | "doping-json"
  | "doping-eng"
  | "doping-extra-eng"
  | "general-json"
  | "mof-json";

export const DOPING_SCHEMAS: SchemaId[] = [
  "doping-json",
  "doping-eng",
  "doping-extra-eng",
];

export function isDopingSchema(schema: SchemaId): boolean {
  return DOPING_SCHEMAS.includes(schema);
}

export interface DopingRecord {
  hosts: string[];
  dopants: string[];
  links: [number, number][];
  results: string[];
  modifiers: string[];
}

export function emptyDoping(): DopingRecord {
  return { hosts: [], dopants: [], links: [], results: [], modifiers: [] };
}

export interface MaterialEntry {
  name: string;
  formula: string;
  acronym: string;
  description: string[];
  structure_or_phase: string[];
  applications: string[];
}

export interface MofEntry {
  name: string;
  mof_formula: string;
  guest_species: string[];
  applications: string[];
  description: string[];
}

export type Entry = MaterialEntry | MofEntry;

export function emptyEntry(schema: SchemaId): Entry {
  if (schema === "mof-json") {
    return {
      name: "",
      mof_formula: "",
      guest_species: [],
      applications: [],
      description: [],
    };
  }
  return {
    name: "",
    formula: "",
    acronym: "",
    description: [],
    structure_or_phase: [],
    applications: [],
  };
}

/** Editable decoded form of one completion. */
export type WorkingRecords =
  | { kind: "doping"; record: DopingRecord }
  | { kind: "entries"; entries: Entry[] };

export interface TaskView {
  task_id: string;
  prompt: string;
  schema: SchemaId;
  model_tag: string;
  status: string;
  suggestion: string | null;
}

export interface SubmitAck {
  ack: boolean;
  result: {
    task_id: string;
    seconds_total: number;
    seconds_per_entry: number;
    seconds_per_token: number;
    verify_only: boolean;
  };
}

export interface ExportedPair {
  prompt: string;
  completion: string;
  schema: SchemaId;
  split: string;
}

/** One per-field validation problem, addressed by a form path. */
export interface FieldIssue {
  path: string;
  message: string;
}
