/**
 * Schema-driven form model: one declarative description per schema that a
 * single renderer walks. Doping tasks get host/dopant lists plus a link
 * pairing control; entry-list tasks get a repeating group of scalar and
 * list fields. Adding a schema means adding a spec here, not a new form.
 */

import { SchemaId, isDopingSchema } from "./types.js";

export interface ScalarFieldSpec {
  kind: "scalar";
  key: string;
  label: string;
  required?: boolean;
}

export interface ListFieldSpec {
  kind: "list";
  key: string;
  label: string;
}

export type FieldSpec = ScalarFieldSpec | ListFieldSpec;

export interface EntryFormSpec {
  kind: "entry-list";
  schema: SchemaId;
  entryLabel: string;
  fields: FieldSpec[];
  rootKeys: [string, string];
}

export interface DopingFormSpec {
  kind: "doping";
  schema: SchemaId;
  entityLists: ListFieldSpec[];
  withExtras: boolean; // results/modifiers editable (DopingExtra-ENG)
  linkEditor: { from: "hosts"; to: "dopants" };
}

export type FormSpec = EntryFormSpec | DopingFormSpec;

export function formSpec(schema: SchemaId): FormSpec {
  if (isDopingSchema(schema)) {
    const withExtras = schema === "doping-extra-eng";
    const entityLists: ListFieldSpec[] = [
      { kind: "list", key: "hosts", label: "Hosts" },
      { kind: "list", key: "dopants", label: "Dopants" },
    ];
    if (withExtras) {
      entityLists.push(
        { kind: "list", key: "results", label: "Result formulae" },
        { kind: "list", key: "modifiers", label: "Modifiers" },
      );
    }
    return {
      kind: "doping",
      schema,
      entityLists,
      withExtras,
      linkEditor: { from: "hosts", to: "dopants" },
    };
  }
  if (schema === "mof-json") {
    return {
      kind: "entry-list",
      schema,
      entryLabel: "MOF",
      rootKeys: ["name", "mof_formula"],
      fields: [
        { kind: "scalar", key: "name", label: "Name", required: false },
        { kind: "scalar", key: "mof_formula", label: "Formula", required: false },
        { kind: "list", key: "guest_species", label: "Guest species" },
        { kind: "list", key: "applications", label: "Applications" },
        { kind: "list", key: "description", label: "Description" },
      ],
    };
  }
  return {
    kind: "entry-list",
    schema,
    entryLabel: "Material",
    rootKeys: ["name", "formula"],
    fields: [
      { kind: "scalar", key: "name", label: "Name" },
      { kind: "scalar", key: "formula", label: "Formula" },
      { kind: "scalar", key: "acronym", label: "Acronym" },
      { kind: "list", key: "description", label: "Description" },
      { kind: "list", key: "structure_or_phase", label: "Structure / phase" },
      { kind: "list", key: "applications", label: "Applications" },
    ],
  };
}

/** Candidate (host index, dopant index) pairs the link editor offers. */
export function linkCandidates(nHosts: number, nDopants: number): [number, number][] {
  const out: [number, number][] = [];
  for (let h = 0; h < nHosts; h++) {
    for (let d = 0; d < nDopants; d++) out.push([h, d]);
  }
  return out;
}
