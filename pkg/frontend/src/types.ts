/** Wire shapes of the admin API. */

export interface SessionInfo {
  session_id: string;
  remote: string;
  terminal: string;
  connected_at: string;
  screen: string;
  version: number;
  last_activity: string;
}

export interface RepositoryInfo {
  version: number;
  screens: string[];
  flows: string[];
}

/** One mirrored frame: the exact character grid a terminal is showing. */
export interface FrameEvent {
  rows: string[];
  cursor: [number, number];
}

export interface ApiError {
  code: string;
  message: string;
  file?: string;
  line?: number;
  column?: number;
  violations?: string[];
}
