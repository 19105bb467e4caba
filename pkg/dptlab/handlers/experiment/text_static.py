TRAINABLE_PARAMS_LINE = 'trainable_params={count}'
CHECKPOINT_WRITTEN = 'checkpoint={path} checksum={checksum}'
RUNLOG_WRITTEN = 'runlog={path} final_accuracy={accuracy}'
PROMPT_EXPORTED = 'prompt={path}'
PROBE_WRITTEN = 'probe={path}'
SWEEP_WRITTEN = 'sweep={path} points={points}'
FEWSHOT_WRITTEN = 'fewshot={path} groups={groups}'

COUNT_TABLE_HEADER = 'profile,method,e,c,b,h,count,floor_k,nearest_k,rounded'
COUNT_VERIFY_OK = 'verify: formula matches enumeration for all rows'
COUNT_VERIFY_FAILED = 'verify: formula and enumeration disagree for {rows}'

SWEEP_CSV_COLUMNS = 'param,value,method,mean,min,max,std,seeds,trainable_params'
FEWSHOT_RUNS_COLUMNS = 'k,seed,method,accuracy,subset_sha256'
FEWSHOT_MEANS_COLUMNS = 'k,method,mean,min,max'

MISSING_OUT = '{command}: missing output path (--out)'
COMPRESS_WRITTEN = 'prompt={path} b={b} trainable_params={count} relative_residual={residual}'
DATASET_WRITTEN = 'train={train} dev={dev} examples={count}'
