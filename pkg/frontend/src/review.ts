/**
 * Review workflow for machine-proposed annotations: accept, reject, or
 * accept everything pending on an image, plus the confidence slider that
 * hides weak pending proposals without touching the server.
 *
 * Mutations go through the same revision-guarded bulk PUT as the editor;
 * a stale revision flips the conflict flag so the app can prompt for a
 * refetch instead of silently overwriting someone else's edit. The
 * slider threshold is a client-side view filter, persisted per project
 * through a small storage interface (localStorage in the browser).
 */

import { ApiError } from "./api.js";
import type {
  AnnotationDraft,
  AnnotationRecord,
  AnnotationsPayload,
  ImageInfo,
} from "./types.js";

export interface SettingStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export interface ReviewApi {
  getAnnotations(imageId: number): Promise<AnnotationsPayload>;
  putAnnotations(
    imageId: number,
    revision: number,
    items: AnnotationDraft[],
  ): Promise<AnnotationsPayload>;
}

/**
 * The one filter rule: accepted items always show; pending items show at
 * or above the threshold. A pending item without a verification score
 * stays visible, the filter has nothing to compare.
 */
export const passesConfidenceFilter = (
  state: string,
  verifiedScore: number | null,
  threshold: number,
): boolean => {
  if (state !== "pending") return true;
  if (verifiedScore === null) return true;
  return verifiedScore >= threshold;
};

const recordToDraft = (record: AnnotationRecord): AnnotationDraft => ({
  class_id: record.class_id,
  kind: record.kind,
  coords: [...record.coords],
  detector_score: record.detector_score,
  verified_score: record.verified_score,
  source: record.source,
  state: record.state,
});

export type ReviewOutcome =
  | { ok: true; image: ImageInfo }
  | { ok: false; conflict: boolean; message: string };

export class ReviewController {
  image: ImageInfo | null = null;
  items: AnnotationRecord[] = [];
  conflict = false;

  private minConfidenceValue: number;
  private readonly api: ReviewApi;
  private readonly storage: SettingStore;
  private readonly settingKey: string;

  constructor(api: ReviewApi, projectId: number, storage: SettingStore) {
    this.api = api;
    this.storage = storage;
    this.settingKey = `review.min_confidence.${projectId}`;
    this.minConfidenceValue = readSetting(storage, this.settingKey);
  }

  get minConfidence(): number {
    return this.minConfidenceValue;
  }

  /** Clamp to [0, 1] and persist so the next session starts from it. */
  setMinConfidence(value: number): void {
    const clamped = Number.isFinite(value) ? Math.min(1, Math.max(0, value)) : 0;
    this.minConfidenceValue = clamped;
    this.storage.setItem(this.settingKey, String(clamped));
  }

  async load(imageId: number): Promise<void> {
    this.adopt(await this.api.getAnnotations(imageId));
  }

  /** Take over a payload another component already fetched or received. */
  adopt(payload: AnnotationsPayload): void {
    this.image = payload.image;
    this.items = payload.items;
    this.conflict = false;
  }

  get pending(): AnnotationRecord[] {
    return this.items.filter((item) => item.state === "pending");
  }

  /**
   * What the overlay should draw: accepted items always, pending items
   * only at or above the slider threshold.
   */
  visibleItems(): AnnotationRecord[] {
    return this.items.filter((item) =>
      passesConfidenceFilter(item.state, item.verified_score, this.minConfidenceValue),
    );
  }

  accept(annotationId: number): Promise<ReviewOutcome> {
    return this.push(
      this.items.map((item) =>
        item.id === annotationId ? { ...recordToDraft(item), state: "accepted" as const } : recordToDraft(item),
      ),
    );
  }

  acceptAll(): Promise<ReviewOutcome> {
    return this.push(
      this.items.map((item) => ({ ...recordToDraft(item), state: "accepted" as const })),
    );
  }

  /** Rejecting deletes the proposal outright; the list shrinks. */
  reject(annotationId: number): Promise<ReviewOutcome> {
    return this.push(
      this.items.filter((item) => item.id !== annotationId).map(recordToDraft),
    );
  }

  private async push(drafts: AnnotationDraft[]): Promise<ReviewOutcome> {
    const image = this.image;
    if (image === null) return { ok: false, conflict: false, message: "no image loaded" };
    try {
      const payload = await this.api.putAnnotations(image.id, image.revision, drafts);
      this.image = payload.image;
      this.items = payload.items;
      return { ok: true, image: payload.image };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.conflict = true;
        return {
          ok: false,
          conflict: true,
          message: "annotations changed on the server, refetch to continue",
        };
      }
      const message = err instanceof Error ? err.message : String(err);
      return { ok: false, conflict: false, message };
    }
  }

  /** Resolve a conflict by reloading the server state. */
  async refetch(): Promise<void> {
    if (this.image !== null) await this.load(this.image.id);
  }
}

const readSetting = (storage: SettingStore, key: string): number => {
  const raw = storage.getItem(key);
  if (raw === null) return 0;
  const parsed = Number(raw);
  return Number.isFinite(parsed) ? Math.min(1, Math.max(0, parsed)) : 0;
};
