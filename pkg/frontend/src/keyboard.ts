/**
 * Keyboard shortcut table. One key, one action: the table is the single
 * source of truth, and the help overlay renders straight from it, so a
 * new shortcut cannot ship undocumented.
 */

export type ShortcutAction =
  | "next-image"
  | "prev-image"
  | "tool-select"
  | "tool-rectangle"
  | "tool-polygon"
  | "tool-obb"
  | "tool-magic"
  | "save"
  | "undo"
  | "delete"
  | "duplicate"
  | "toggle-help";

export interface Shortcut {
  key: string;
  action: ShortcutAction;
  description: string;
}

export const SHORTCUTS: readonly Shortcut[] = [
  { key: "ArrowRight", action: "next-image", description: "go to the next image" },
  { key: "ArrowLeft", action: "prev-image", description: "go to the previous image" },
  { key: "v", action: "tool-select", description: "switch to the select tool" },
  { key: "r", action: "tool-rectangle", description: "switch to the rectangle tool" },
  { key: "p", action: "tool-polygon", description: "switch to the polygon tool" },
  { key: "o", action: "tool-obb", description: "switch to the rotated-box tool" },
  { key: "m", action: "tool-magic", description: "switch to the magic mask tool" },
  { key: "s", action: "save", description: "save annotations to the server" },
  { key: "z", action: "undo", description: "undo the last edit" },
  { key: "Delete", action: "delete", description: "delete the selected annotation" },
  { key: "d", action: "duplicate", description: "duplicate the selected annotation" },
  { key: "?", action: "toggle-help", description: "show or hide this overlay" },
];

const normalizeKey = (key: string): string =>
  key.length === 1 ? key.toLowerCase() : key;

const table = new Map(SHORTCUTS.map((s) => [normalizeKey(s.key), s.action]));

export interface KeyModifiers {
  ctrl?: boolean;
  meta?: boolean;
  alt?: boolean;
}

/**
 * Resolve a key press to an action, or null when unbound. Shortcuts are
 * plain keys; any ctrl/meta/alt chord is left to the browser.
 */
export const actionForKey = (key: string, modifiers: KeyModifiers = {}): ShortcutAction | null => {
  if (modifiers.ctrl || modifiers.meta || modifiers.alt) return null;
  return table.get(normalizeKey(key)) ?? null;
};

/** Shortcuts must not fire while the user is typing in a field. */
export const isEditableTarget = (target: unknown): boolean => {
  if (typeof HTMLElement === "undefined" || !(target instanceof HTMLElement)) return false;
  if (target instanceof HTMLInputElement || target instanceof HTMLTextAreaElement) return true;
  return target.isContentEditable;
};

/** One line per shortcut for the help overlay. */
export const helpOverlayLines = (): string[] =>
  SHORTCUTS.map((s) => `${s.key}  ${s.description}`);
