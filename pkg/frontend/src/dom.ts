/**
 * Minimal browser shell: renders the claimed passage next to the
 * schema-generated form, keeps the active timer honest via focus/blur,
 * and wires the submit / verify buttons. All state and validation live in
 * Editor; this file only reflects them into the DOM.
 */

import { AnnotationApi } from "./api.js";
import { Editor } from "./editor.js";
import { formSpec, linkCandidates } from "./form.js";
import { DopingRecord, Entry, SchemaId, emptyEntry } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

export function mountApp(root: HTMLElement, baseUrl: string, annotator: string): void {
  const api = new AnnotationApi(baseUrl, null);
  const editor = new Editor(api, annotator, {
    storage: window.localStorage,
  });
  window.addEventListener("blur", () => editor.state?.timer.onBlur());
  window.addEventListener("focus", () => editor.state?.timer.onFocus());
  window.addEventListener("online", () => {
    void editor.flushQueue().then(() => render());
  });

  const status = el("div", { class: "status" });
  const passage = el("article", { class: "passage" });
  const form = el("section", { class: "form" });
  const controls = el("footer", { class: "controls" });
  root.replaceChildren(status, passage, form, controls);

  function render(): void {
    const state = editor.state;
    passage.replaceChildren();
    form.replaceChildren();
    controls.replaceChildren();
    if (!state) {
      status.textContent =
        editor.queue.length > 0
          ? `offline: ${editor.queue.length} submission(s) queued`
          : "queue empty";
      const btn = el("button", {}, "Load next task");
      btn.addEventListener("click", () => void load());
      controls.append(btn);
      return;
    }
    status.textContent = `${state.task.task_id} · ${state.task.schema}` +
      (state.hadSuggestion ? " · pre-filled" : " · blank");
    passage.append(el("p", {}, state.task.prompt));
    renderForm(state.task.schema);
    renderControls();
  }

  function issueFor(path: string): string | null {
    for (const issue of editor.validationIssues()) {
      if (issue.path === path) return issue.message;
    }
    return null;
  }

  function textInput(path: string, value: string, apply: (v: string) => void): HTMLElement {
    const wrap = el("div", { class: "field" });
    const input = el("input", { value });
    input.value = value;
    input.addEventListener("input", () => {
      editor.update(() => apply(input.value));
      reflectIssue();
    });
    const note = el("span", { class: "issue" });
    const reflectIssue = () => {
      const message = issueFor(path);
      note.textContent = message ?? "";
      input.classList.toggle("invalid", message !== null);
    };
    reflectIssue();
    wrap.append(input, note);
    return wrap;
  }

  function listEditor(
    path: string,
    items: string[],
    label: string,
  ): HTMLElement {
    const block = el("fieldset", { class: "list" });
    block.append(el("legend", {}, label));
    items.forEach((item, j) => {
      const row = textInput(`${path}[${j}]`, item, (v) => (items[j] = v));
      const rm = el("button", { type: "button" }, "×");
      rm.addEventListener("click", () => {
        editor.update(() => items.splice(j, 1));
        render();
      });
      row.append(rm);
      block.append(row);
    });
    const add = el("button", { type: "button" }, `+ ${label}`);
    add.addEventListener("click", () => {
      editor.update(() => items.push(""));
      render();
    });
    block.append(add);
    return block;
  }

  function renderForm(schema: SchemaId): void {
    const state = editor.state!;
    const spec = formSpec(schema);
    if (spec.kind === "doping" && state.working.kind === "doping") {
      const record: DopingRecord = state.working.record;
      for (const field of spec.entityLists) {
        form.append(
          listEditor(field.key, (record as unknown as Record<string, string[]>)[field.key], field.label),
        );
      }
      const links = el("fieldset", { class: "links" });
      links.append(el("legend", {}, "Host–dopant links"));
      for (const [h, d] of linkCandidates(record.hosts.length, record.dopants.length)) {
        const row = el("label", {});
        const box = el("input", { type: "checkbox" });
        box.checked = record.links.some(([lh, ld]) => lh === h && ld === d);
        box.addEventListener("change", () => {
          editor.update(() => {
            const at = record.links.findIndex(([lh, ld]) => lh === h && ld === d);
            if (box.checked && at < 0) record.links.push([h, d]);
            if (!box.checked && at >= 0) record.links.splice(at, 1);
          });
        });
        row.append(box, ` ${record.hosts[h] || "(host)"} → ${record.dopants[d] || "(dopant)"}`);
        links.append(row);
      }
      form.append(links);
      return;
    }
    if (spec.kind === "entry-list" && state.working.kind === "entries") {
      const entries = state.working.entries;
      entries.forEach((entry, i) => {
        const card = el("fieldset", { class: "entry" });
        card.append(el("legend", {}, `${spec.entryLabel} ${i + 1}`));
        const rec = entry as unknown as Record<string, string | string[]>;
        for (const field of spec.fields) {
          if (field.kind === "scalar") {
            card.append(el("label", {}, field.label));
            card.append(
              textInput(`entries[${i}].${field.key}`, rec[field.key] as string, (v) => {
                rec[field.key] = v;
              }),
            );
          } else {
            card.append(
              listEditor(`entries[${i}].${field.key}`, rec[field.key] as string[], field.label),
            );
          }
        }
        const rm = el("button", { type: "button" }, `remove ${spec.entryLabel.toLowerCase()}`);
        rm.addEventListener("click", () => {
          editor.update(() => entries.splice(i, 1));
          render();
        });
        card.append(rm);
        form.append(card);
      });
      const add = el("button", { type: "button" }, `+ ${spec.entryLabel}`);
      add.addEventListener("click", () => {
        editor.update(() => entries.push(emptyEntry(schema) as Entry));
        render();
      });
      form.append(add);
    }
  }

  function renderControls(): void {
    const submit = el("button", {}, "Submit correction");
    submit.addEventListener("click", () => void finish(false));
    const verify = el("button", {}, "Verified correct");
    verify.disabled = !editor.canVerify();
    verify.addEventListener("click", () => void finish(true));
    controls.append(submit, verify);
  }

  async function finish(verified: boolean): Promise<void> {
    const outcome = verified
      ? await editor.markVerified()
      : await editor.submitCorrection();
    if (outcome.status === "invalid") {
      status.textContent = `fix ${outcome.issues.length} field problem(s) before submitting`;
      render();
      return;
    }
    if (outcome.status === "rejected") {
      status.textContent = outcome.detail;
      return;
    }
    render();
  }

  async function load(): Promise<void> {
    await editor.flushQueue();
    await editor.loadNext();
    render();
  }

  void load();
}
