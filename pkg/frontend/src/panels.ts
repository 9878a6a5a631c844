// Sidebar panels: incident list, detail view with raw vs sanitized text,
// contact directory, preference controls and the word-cloud tab.

import { ApiClient, ApiError } from "./api.js";
import { glyphFor } from "./map.js";
import { AppState, selectedIncident, visibleIncidents } from "./state.js";
import { Contact, Incident, Preferences, WordcloudRecord } from "./types.js";

export function renderList(
  container: HTMLElement,
  state: AppState,
  onSelect: (incident: Incident) => void,
): void {
  container.textContent = "";
  const incidents = visibleIncidents(state);
  if (incidents.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-note";
    empty.textContent = "No incidents yet.";
    container.append(empty);
    return;
  }
  for (const incident of incidents) {
    const row = document.createElement("button");
    row.className = "incident-row";
    if (incident.id === state.selectedId) row.classList.add("selected");
    const when = new Date(incident.detected_at).toLocaleTimeString();
    const where = incident.lat === null ? "no location" : incident.place_name ?? "located";
    row.innerHTML = "";
    const title = document.createElement("span");
    title.className = "row-title";
    title.textContent = `${glyphFor(incident.category)} ${incident.category}`;
    const meta = document.createElement("span");
    meta.className = "row-meta";
    meta.textContent = `${when} · ${where}${incident.out_of_area ? " · out of area" : ""}`;
    const text = document.createElement("span");
    text.className = "row-text";
    text.textContent = incident.sanitized_text;
    row.append(title, meta, text);
    row.addEventListener("click", () => onSelect(incident));
    container.append(row);
  }
}

export function renderDetail(container: HTMLElement, state: AppState): void {
  container.textContent = "";
  const incident = selectedIncident(state);
  if (!incident) {
    const note = document.createElement("p");
    note.className = "empty-note";
    note.textContent = "Select an incident to inspect it.";
    container.append(note);
    return;
  }
  const title = document.createElement("h3");
  title.textContent = `${glyphFor(incident.category)} ${incident.category}`;
  container.append(title);

  const rows: [string, string][] = [
    ["Detected", new Date(incident.detected_at).toLocaleString()],
    ["Source post", incident.source_id],
    [
      "Location",
      incident.lat === null
        ? "unknown"
        : `${incident.lat.toFixed(4)}, ${incident.lon!.toFixed(4)}` +
          (incident.place_name ? ` (${incident.place_name})` : "") +
          (incident.geo_source ? ` via ${incident.geo_source}` : ""),
    ],
    ["Area", incident.out_of_area ? "outside monitored area" : "inside monitored area"],
    ["Filter margin", incident.scores.stage1.toFixed(3)],
  ];
  const table = document.createElement("dl");
  for (const [label, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = label;
    const dd = document.createElement("dd");
    dd.textContent = value;
    table.append(dt, dd);
  }
  container.append(table);

  for (const [heading, text] of [
    ["Sanitized text", incident.sanitized_text],
    ["Raw text", incident.raw_text],
  ] as const) {
    const h = document.createElement("h4");
    h.textContent = heading;
    const p = document.createElement("p");
    p.className = "post-text";
    p.textContent = text;
    container.append(h, p);
  }
}

export async function renderContacts(
  container: HTMLElement,
  api: ApiClient,
  category: string | null,
  allCategories: string[],
): Promise<void> {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = category ? `Contacts · ${category}` : "Contacts";
  container.append(heading);
  let entries: Contact[];
  let fallback = false;
  try {
    entries = category ? await api.contacts(category) : await api.allContacts(allCategories);
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      // stale category cache: fall back to the full directory
      fallback = true;
      entries = await api.allContacts(allCategories);
    } else {
      const failure = document.createElement("p");
      failure.className = "error-note";
      failure.textContent = "Could not load contacts.";
      container.append(failure);
      return;
    }
  }
  if (fallback) {
    const note = document.createElement("p");
    note.className = "empty-note";
    note.textContent = "Unknown category; showing the full directory.";
    container.append(note);
  }
  if (entries.length === 0) {
    const none = document.createElement("p");
    none.className = "empty-note";
    none.textContent = "No contacts configured for this category.";
    container.append(none);
    return;
  }
  for (const entry of entries) {
    const card = document.createElement("div");
    card.className = "contact-card";
    const name = document.createElement("strong");
    name.textContent = entry.name;
    const phone = document.createElement("a");
    phone.href = `tel:${entry.phone}`;
    phone.textContent = entry.phone;
    phone.className = "contact-phone";
    const desc = document.createElement("p");
    desc.textContent = `${entry.description} (${entry.category})`;
    card.append(name, phone, desc);
    container.append(card);
  }
}

export function renderPreferences(
  container: HTMLElement,
  prefs: Preferences,
  allCategories: string[],
  onChange: (update: {
    notifications_enabled: boolean;
    categories: string[];
  }) => Promise<void>,
): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = `Preferences · ${prefs.user_id}`;
  container.append(heading);

  const errorNote = document.createElement("p");
  errorNote.className = "error-note";
  errorNote.hidden = true;

  const current = {
    notifications_enabled: prefs.notifications_enabled,
    categories: [...prefs.categories],
  };

  const submit = async () => {
    errorNote.hidden = true;
    try {
      await onChange({ ...current, categories: [...current.categories] });
    } catch (error) {
      errorNote.textContent =
        error instanceof ApiError ? `Rejected: ${error.message}` : "Update failed.";
      errorNote.hidden = false;
    }
  };

  const toggleLabel = document.createElement("label");
  toggleLabel.className = "pref-toggle";
  const toggle = document.createElement("input");
  toggle.type = "checkbox";
  toggle.checked = prefs.notifications_enabled;
  toggle.addEventListener("change", () => {
    current.notifications_enabled = toggle.checked;
    void submit();
  });
  toggleLabel.append(toggle, document.createTextNode(" Notifications enabled"));
  container.append(toggleLabel);

  const catHeading = document.createElement("h4");
  catHeading.textContent = "Subscribed categories";
  container.append(catHeading);
  for (const category of allCategories) {
    const label = document.createElement("label");
    label.className = "pref-category";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = prefs.categories.includes(category);
    box.addEventListener("change", () => {
      current.categories = box.checked
        ? [...current.categories, category]
        : current.categories.filter((c) => c !== category);
      void submit();
    });
    label.append(box, document.createTextNode(` ${glyphFor(category)} ${category}`));
    container.append(label);
  }
  container.append(errorNote);
}

export function renderWordcloud(container: HTMLElement, records: WordcloudRecord[]): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = "Top classifier attributes";
  container.append(heading);
  if (records.length === 0) {
    const note = document.createElement("p");
    note.className = "empty-note";
    note.textContent = "No attribute ranking has been exported yet.";
    container.append(note);
    return;
  }
  const cloud = document.createElement("p");
  cloud.className = "wordcloud";
  for (const record of records) {
    const term = document.createElement("span");
    term.textContent = record.term;
    term.style.fontSize = `${(0.8 + 1.6 * record.weight).toFixed(2)}rem`;
    term.style.opacity = `${0.55 + 0.45 * record.weight}`;
    term.title = record.weight.toFixed(3);
    cloud.append(term, document.createTextNode(" "));
  }
  container.append(cloud);
}
