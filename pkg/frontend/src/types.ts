/**
 * Wire types for the annotation service REST API, plus the client-side
 * working model the canvas edits. Field names on the wire types follow
 * the JSON payloads exactly.
 */

export type ProjectMode = "detection" | "obb" | "segmentation";
export type GeometryKind = "bbox" | "obb" | "polygon";
export type AnnotationState = "pending" | "accepted";
export type AnnotationSource = "auto" | "auto_verified" | "assisted" | "manual";
export type ImageStatus = "unannotated" | "pending_review" | "annotated" | "failed";
export type JobState = "queued" | "running" | "done" | "failed";
export type ToolName = "rectangle" | "polygon" | "obb" | "magic" | "select";

export interface PipelineSettingsInfo {
  detection_threshold: number;
  cluster_iou_threshold: number;
  temperature: number;
  acceptance_mode: string;
  min_confidence_filter: number;
}

export interface LabelClassInfo {
  id: number;
  name: string;
  display_color: string;
}

export interface ProjectInfo {
  id: number;
  name: string;
  mode: ProjectMode;
  created_at: string;
  settings: PipelineSettingsInfo;
  classes: LabelClassInfo[];
  image_count: number;
}

export interface ImageInfo {
  id: number;
  name: string;
  width: number;
  height: number;
  status: ImageStatus;
  revision: number;
}

export interface AnnotationRecord {
  id: number;
  image_id: number;
  class_id: number;
  kind: GeometryKind;
  coords: number[];
  detector_score: number | null;
  verified_score: number | null;
  source: AnnotationSource;
  state: AnnotationState;
  confidence: number | null;
}

/** Item shape accepted by the bulk PUT; ids are assigned server-side. */
export interface AnnotationDraft {
  class_id: number;
  kind: GeometryKind;
  coords: number[];
  detector_score: number | null;
  verified_score: number | null;
  source: AnnotationSource;
  state: AnnotationState;
}

export interface AnnotationsPayload {
  image: ImageInfo;
  items: AnnotationRecord[];
}

export interface MaskResult {
  polygons: number[][];
  pixel_count: number;
}

export interface StatsBody {
  image_count: number;
  completion: Record<ImageStatus, number>;
  class_counts: Record<string, number>;
  per_image_histogram: Record<string, number>;
}

export interface JobProgress {
  processed: number;
  total: number;
}

export interface JobInfo {
  id: string;
  kind: string;
  project_id: number;
  state: JobState;
  progress: JobProgress;
  report: Record<string, unknown> | null;
  error: string | null;
}

export interface Page<T> {
  items: T[];
  total: number;
  limit: number;
  offset: number;
}

export interface LoginResult {
  token: string;
  username: string;
}

/**
 * One annotation as the canvas works on it. localId is a client-side key
 * that stays stable across edits; serverId is the id from the last server
 * acknowledgement and is null for items not yet persisted.
 */
export interface LocalAnnotation {
  localId: number;
  serverId: number | null;
  classId: number;
  kind: GeometryKind;
  coords: number[];
  detectorScore: number | null;
  verifiedScore: number | null;
  source: AnnotationSource;
  state: AnnotationState;
}

export const fromRecord = (record: AnnotationRecord, localId: number): LocalAnnotation => ({
  localId,
  serverId: record.id,
  classId: record.class_id,
  kind: record.kind,
  coords: [...record.coords],
  detectorScore: record.detector_score,
  verifiedScore: record.verified_score,
  source: record.source,
  state: record.state,
});

export const toDraft = (ann: LocalAnnotation): AnnotationDraft => ({
  class_id: ann.classId,
  kind: ann.kind,
  coords: [...ann.coords],
  detector_score: ann.detectorScore,
  verified_score: ann.verifiedScore,
  source: ann.source,
  state: ann.state,
});
