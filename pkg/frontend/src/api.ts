/** Typed client for the annotation service. The UI never computes labels
 *  itself; every state change round-trips through these endpoints. */

export type Label = 'Yes' | 'No' | 'Neither';

export interface SequencePayload {
  sequence_id: string;
  patient_id: string;
  note_id: string;
  keyword: string;
  match_offset: number;
  window_start: number;
  window_end: number;
  text: string;
  keyword_start: number;
  keyword_end: number;
}

export interface NextResponse {
  done: boolean;
  sequence: SequencePayload | null;
  remaining: number;
}

export interface LabelResponse {
  sequence_id: string;
  label: Label;
  provenance_kind: string;
}

export interface PatternInfo {
  pattern_id: string;
  regex: string;
  label: Label;
  author: string;
  retired: boolean;
  match_count: number;
}

export interface PreviewResponse {
  match_count: number;
  examples: SequencePayload[];
}

export interface ProgressStats {
  total_sequences: number;
  annotated: number;
  unlabeled: number;
  by_class: Record<string, Record<string, number>>;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = 'ApiError';
  }
}

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (typeof body.detail === 'string') detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return resp.json() as Promise<T>;
  }

  fetchNext(): Promise<NextResponse> {
    return this.request('/next');
  }

  getSequence(sequenceId: string): Promise<SequencePayload> {
    return this.request(`/sequences/${encodeURIComponent(sequenceId)}`);
  }

  submitLabel(
    sequenceId: string,
    label: Label,
    annotatorId: string,
    overwrite = false,
  ): Promise<LabelResponse> {
    return this.request('/label', {
      method: 'POST',
      body: JSON.stringify({
        sequence_id: sequenceId,
        label,
        annotator_id: annotatorId,
        overwrite,
      }),
    });
  }

  createPattern(
    regex: string,
    label: Label,
    author: string,
  ): Promise<{ pattern_id: string; propagated: number }> {
    return this.request('/patterns', {
      method: 'POST',
      body: JSON.stringify({ regex, label, author }),
    });
  }

  previewPattern(regex: string, limit = 10): Promise<PreviewResponse> {
    return this.request('/patterns/preview', {
      method: 'POST',
      body: JSON.stringify({ regex, limit }),
    });
  }

  listPatterns(): Promise<PatternInfo[]> {
    return this.request('/patterns');
  }

  retirePattern(
    patternId: string,
  ): Promise<{ pattern_id: string; reverted: number }> {
    return this.request(`/patterns/${encodeURIComponent(patternId)}`, {
      method: 'DELETE',
    });
  }

  progress(): Promise<ProgressStats> {
    return this.request('/progress');
  }

  labels(): Promise<{ labels: Label[] }> {
    return this.request('/labels');
  }
}
